#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shallowid/net.hpp"
#include "shallowid/numerics.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid {

/// L = {u + t v : t real}
struct Line {
  Vector u;
  Vector v;

  Vector at(double t) const { return u + t * v; }
};

struct FeasibleLineSet {
  std::vector<Line> lines;
  /// crossings[j][k]: sorted parameters where line j meets the hyperplanes.
  std::vector<std::vector<double>> crossings;
  /// assignment[j][k]: index into GroupedReLU::k2 of the hyperplane hit at crossings[j][k].
  std::vector<std::vector<std::size_t>> assignment;
};

struct SamplePlan {
  std::vector<Line> lines;
  /// params[j]: 2m+2 sorted parameters on line j, two per interval between crossings.
  std::vector<std::vector<double>> params;

  std::size_t size() const;
  /// All plan points, line by line, one per row.
  numerics::Mat<double> points() const;
};

struct LabeledSamples {
  SamplePlan plan;
  Vector values;
};

/// Draws m*d lines that satisfy the feasibility conditions for `g` (#K1 = 0).
FeasibleLineSet build_feasible_lines(const GroupedReLU& g, std::uint64_t seed, const ToleranceConfig& tol);

/// Places two jittered parameters per interval on each line and enforces that every
/// collinear triple of plan points lies on a plan line.
SamplePlan build_sample_plan(const GroupedReLU& g, const FeasibleLineSet& ls, std::uint64_t seed,
                             const ToleranceConfig& tol);

/// Values of `net` at every plan point.
LabeledSamples sample(const ShallowNet& net, const SamplePlan& plan);

struct AffinePiece {
  double slope = 0.0;
  double intercept = 0.0;
};

struct Breakpoints {
  std::vector<double> params;
  std::vector<AffinePiece> pieces;
};

/// Kinks of a piecewise affine function of t sampled twice per piece.
Breakpoints extract_breakpoints(const std::vector<double>& params, const std::vector<double>& values,
                                const ToleranceConfig& tol);

/// Hyperplanes through the crossing points, one point per line on each.
/// crossing_points[j] holds the points found on line j.
std::vector<Hyperplane> recover_hyperplanes(const std::vector<std::vector<Vector>>& crossing_points, std::size_t m,
                                            const ToleranceConfig& tol);

/// Rebuilds a ReLU network from samples on a feasible plan.
ShallowNet reconstruct(const LabeledSamples& data, const ToleranceConfig& tol);

}  // namespace shallowid
