#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shallowid/net.hpp"
#include "shallowid/numerics.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid {

/// Analytic admissibility: s_k a_k != 0 and no (a_i, b_i) = +-(a_j, b_j).
/// For sigmoid and tanh this is the same as irreducibility.
AdmissibilityReport check_admissible_analytic(const ShallowNet& net, const ToleranceConfig& tol);

/// Sign-normalised network: every direction has a positive first significant entry,
/// neurons sorted lexicographically by (a, b).
struct AnalyticCanonicalForm {
  Activation activation;
  Eigen::Index d = 1;
  std::vector<Neuron> neurons;
  double c = 0.0;

  ShallowNet net() const;
};

/// Flips s sigma(u) = -s sigma(-u) + s c0 where needed and sorts. Throws Error(admissibility).
AnalyticCanonicalForm canonicalize_analytic(const ShallowNet& net, const ToleranceConfig& tol);

bool test_equivalent_analytic(const ShallowNet& n1, const ShallowNet& n2, const ToleranceConfig& tol);

struct FullSparkFrame {
  std::vector<Vector> vectors;
  std::vector<double> nodes;
};

/// N vectors (1, t, ..., t^{d-1}) at equispaced nodes t in [-1, 1].
FullSparkFrame vandermonde_frame(Eigen::Index d, std::size_t n);

struct FullSparkCheck {
  bool full_spark = true;
  bool exhaustive = true;
  std::size_t subsets_checked = 0;
  /// Smallest |det| over checked subsets with every vector scaled to unit length.
  double min_abs_det = 0.0;
};

/// Rank check of d-subsets: all of them for N <= 12, otherwise `samples` seeded random ones.
FullSparkCheck check_full_spark(const FullSparkFrame& frame, const ToleranceConfig& tol, std::uint64_t seed = 0,
                                std::size_t samples = 4096);

/// Smallest frame size that guarantees a separating direction for M vectors in R^d.
std::size_t separating_frame_size(std::size_t vectors, Eigen::Index d);

/// First frame vector v on which <a_i, v> are pairwise distinct.
Vector separating_direction(const FullSparkFrame& frame, const std::vector<Vector>& vectors,
                            const ToleranceConfig& tol);

struct AnalyticSamplePlan {
  std::size_t m = 0;
  Eigen::Index d = 1;
  FullSparkFrame frame;
  std::vector<double> scalars;

  std::size_t size() const { return frame.vectors.size() * scalars.size(); }
  /// Rows z_i * v_j, scalar-major.
  numerics::Mat<double> points() const;
};

constexpr std::size_t kDefaultPlanCap = 1000000;

/// Point count (C(4m,2)(d-1) + 1) * 4^m, or none if it overflows.
std::optional<std::size_t> analytic_plan_size(std::size_t m, Eigen::Index d);

AnalyticSamplePlan build_analytic_plan(std::size_t m, Eigen::Index d, std::size_t cap = kDefaultPlanCap);

struct IdentificationReport {
  double max_gap = 0.0;
  bool equal_on_plan = false;
  bool equivalent = false;
  std::optional<std::string> warning;
};

IdentificationReport verify_identification(const ShallowNet& n1, const ShallowNet& n2, const AnalyticSamplePlan& plan,
                                           const ToleranceConfig& tol);

struct ExpTerm {
  double alpha = 0.0;
  double coefficient = 0.0;
};

/// h(x) = f(x) * prod_k (1 + exp(-(a_k x + b_k))) = sum_alpha c_alpha exp(-alpha x)
/// for f(x) = sum_k s_k Sigmoid(a_k x + b_k) + s0.
struct ExpSumExpansion {
  std::vector<ExpTerm> terms;  // sorted by alpha; the alphas form the subset-sum set A

  double evaluate(double x) const;
};

ExpSumExpansion exp_sum_expansion(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& s, double s0, const ToleranceConfig& tol);

/// Direct evaluation of f(x) * prod_k (1 + exp(-(a_k x + b_k))).
double exp_sum_h(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& s, double s0,
                 double x);

}  // namespace shallowid
