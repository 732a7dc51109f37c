#include "shallowid/relu_adversary.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace shallowid {

namespace {

constexpr int kAttempts = 1000;
constexpr double kMinWitnessGap = 1e-6;

Vector draw_unit(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  while (true) {
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = dist(rng);
    const double norm = x.norm();
    if (norm > 0.1) return x / norm;
  }
}

}  // namespace

AdversarialPair build_pair(const numerics::Mat<double>& points, std::size_t m, std::uint64_t seed,
                           const ToleranceConfig& tol) {
  const Eigen::Index d = points.cols();
  if (d < 2) throw Error(ErrorKind::input, "build_pair needs d >= 2");
  if (m < 2) throw Error(ErrorKind::input, "build_pair needs m >= 2");
  if (points.rows() == 0) throw Error(ErrorKind::input, "build_pair needs at least one point");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bias(-1.0, 1.0);
  AdversarialParams p;
  bool found = false;
  for (int attempt = 0; attempt < kAttempts && !found; ++attempt) {
    p.w = draw_unit(rng, d);
    p.b = bias(rng);
    const Vector margins = ((points * p.w).array() + p.b).abs();
    const double min_margin = margins.minCoeff();
    if (!(min_margin > tol.zero_tol)) continue;

    const Vector r = draw_unit(rng, d);
    const Vector n = r - r.dot(p.w) * p.w;
    if (n.norm() < 0.1) continue;
    p.n = n / n.norm();

    const double spread = (points * p.n).cwiseAbs().maxCoeff();
    p.eps_prime = spread > tol.zero_tol ? 0.5 * min_margin / std::max(spread, tol.zero_tol) : 1.0;
    p.eps = 0.5 * p.eps_prime;
    if (p.eps_prime - p.eps < kMinWitnessGap) continue;
    found = true;
  }
  if (!found) throw Error(ErrorKind::construction, "no separating hyperplane with a usable margin found");

  ShallowNet net1;
  net1.activation = Activation{ActivationKind::relu};
  net1.d = d;
  net1.neurons.push_back({p.w + p.eps * p.n, p.b, 1.0});
  net1.neurons.push_back({p.w - p.eps * p.n, p.b, 1.0});
  ShallowNet net2 = net1;
  net2.neurons[0].a = p.w + p.eps_prime * p.n;
  net2.neurons[1].a = p.w - p.eps_prime * p.n;

  std::vector<Hyperplane> taken;
  for (const auto* net : {&net1, &net2}) {
    for (const auto& nr : net->neurons) taken.push_back(canonical_hyperplane(nr.a, nr.b, tol));
  }
  for (std::size_t k = 2; k < m; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      Neuron extra{draw_unit(rng, d), bias(rng), 1.0};
      const Hyperplane h = canonical_hyperplane(extra.a, extra.b, tol);
      if (std::any_of(taken.begin(), taken.end(), [&](const Hyperplane& t) { return same_hyperplane(t, h, tol); })) {
        continue;
      }
      taken.push_back(h);
      p.extra_neurons.push_back(extra);
      placed = true;
    }
    if (!placed) throw Error(ErrorKind::construction, "could not place extra neuron " + std::to_string(k));
  }
  for (const auto& extra : p.extra_neurons) {
    net1.neurons.push_back(extra);
    net2.neurons.push_back(extra);
  }

  AdversarialPair out;
  out.witness = -p.b * p.w / p.w.squaredNorm() + p.n;
  out.net1 = std::move(net1);
  out.net2 = std::move(net2);
  out.params = std::move(p);
  return out;
}

}  // namespace shallowid
