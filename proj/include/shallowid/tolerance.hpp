#pragma once

namespace shallowid {

/// Comparison thresholds shared by every module.
///
/// rank_tol is relative to the largest singular value; the other three are
/// absolute unless a call site documents a scale factor.
struct ToleranceConfig {
  double rank_tol = 1e-9;
  double match_tol = 1e-8;
  double residual_tol = 1e-8;
  double zero_tol = 1e-12;

  /// Throws Error(input) unless all fields are positive and rank_tol <= match_tol.
  void validate() const;
};

}  // namespace shallowid
