#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "shallowid/net.hpp"
#include "shallowid/numerics.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid {

struct AdversarialParams {
  Vector w;
  double b = 0.0;
  Vector n;  // unit, orthogonal to w
  double eps = 0.0;
  double eps_prime = 0.0;
  std::vector<Neuron> extra_neurons;
};

/// Two irreducible ReLU networks that agree on a given point set but differ at `witness`.
struct AdversarialPair {
  ShallowNet net1;
  ShallowNet net2;
  Vector witness;
  AdversarialParams params;
};

/// Builds the pair for the rows of `points`; m >= 2 neurons each, d >= 2.
AdversarialPair build_pair(const numerics::Mat<double>& points, std::size_t m, std::uint64_t seed,
                           const ToleranceConfig& tol);

}  // namespace shallowid
