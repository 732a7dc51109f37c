#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "shallowid/net.hpp"
#include "shallowid/numerics.hpp"
#include "shallowid/relu_structure.hpp"

namespace support {

using shallowid::ActivationKind;
using shallowid::Neuron;
using shallowid::ShallowNet;
using shallowid::Vector;
using Points = shallowid::numerics::Mat<double>;

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index d, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = dist(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Points uniform_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, double lo, double hi) {
  Points x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = uniform_vector(rng, d, lo, hi).transpose();
  return x;
}

inline Points grid(Eigen::Index d, int per_axis, double lo, double hi) {
  Eigen::Index n = 1;
  for (Eigen::Index i = 0; i < d; ++i) n *= per_axis;
  Points x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index q = r;
    for (Eigen::Index i = 0; i < d; ++i) {
      x(r, i) = lo + (hi - lo) * static_cast<double>(q % per_axis) / (per_axis - 1);
      q /= per_axis;
    }
  }
  return x;
}

inline ShallowNet make_net(ActivationKind kind, Eigen::Index d, std::vector<Neuron> neurons, double c) {
  ShallowNet net;
  net.activation = shallowid::Activation{kind};
  net.d = d;
  net.neurons = std::move(neurons);
  net.c = c;
  return net;
}

inline ShallowNet figure1_net() {
  return make_net(ActivationKind::relu, 2,
                  {{(Vector(2) << 1, 1).finished(), 0.0, 1.0}, {(Vector(2) << 1, -1).finished(), 0.0, 1.0}}, 0.0);
}

/// Unit-normalised hyperplane with the first clearly nonzero entry positive.
inline std::pair<Vector, double> unit_plane(const Vector& a, double b) {
  const double r = a.norm();
  Vector u = a / r;
  double c = b / r;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u(i)) > 1e-9) {
      if (u(i) < 0) {
        u = -u;
        c = -c;
      }
      break;
    }
  }
  return {u, c};
}

/// ReLU net with m mutually distinct hyperplanes, |s| in [0.5, 2], ||a|| >= 0.3, b in [-1, 1].
inline ShallowNet random_relu_net(std::mt19937_64& rng, Eigen::Index d, std::size_t m) {
  std::vector<Neuron> neurons;
  std::vector<std::pair<Vector, double>> planes;
  while (neurons.size() < m) {
    Vector a = uniform_vector(rng, d, -1, 1);
    if (a.norm() < 0.3) continue;
    const double b = uniform(rng, -1, 1);
    const auto p = unit_plane(a, b);
    const bool clash = std::any_of(planes.begin(), planes.end(), [&](const auto& q) {
      return (q.first - p.first).norm() < 1e-3 && std::abs(q.second - p.second) < 1e-3;
    });
    if (clash) continue;
    planes.push_back(p);
    const double mag = uniform(rng, 0.5, 2.0);
    neurons.push_back({a, b, uniform(rng, 0, 1) < 0.5 ? -mag : mag});
  }
  return make_net(ActivationKind::relu, d, std::move(neurons), uniform(rng, -1, 1));
}

inline double random_scale(std::mt19937_64& rng) {
  const double mag = uniform(rng, 0.5, 2.0);
  return uniform(rng, 0, 1) < 0.5 ? -mag : mag;
}

inline Vector unit_vector(std::mt19937_64& rng, Eigen::Index d) {
  while (true) {
    const Vector v = uniform_vector(rng, d, -1, 1);
    if (v.norm() > 0.3) return v.normalized();
  }
}

/// Admissible ReLU nets at d = 2 with at most four neurons, mixing generic nets with
/// opposite pairs, parallel hyperplanes, lattice coincidences and constructed
/// cancellations. Every hyperplane passes within distance 1 of the origin.
inline ShallowNet structured_relu_net(std::mt19937_64& rng, int kind) {
  const Eigen::Index d = 2;
  const shallowid::ToleranceConfig tol;
  auto neuron = [&](const Vector& a, double s) { return Neuron{a, uniform(rng, -1, 1) * a.norm(), s}; };
  while (true) {
    std::vector<Neuron> ns;
    switch (kind % 6) {
      case 0: {
        const std::size_t m = 1 + static_cast<std::size_t>(uniform(rng, 0, 4));
        for (std::size_t k = 0; k < m; ++k) ns.push_back(neuron(unit_vector(rng, d) * uniform(rng, 0.5, 2), random_scale(rng)));
        break;
      }
      case 1: {
        std::uniform_int_distribution<int> coord(-2, 2), bias(-1, 1), pick(0, 3), count(1, 4);
        const double scales[] = {-2, -1, 1, 2};
        const int m = count(rng);
        for (int k = 0; k < m; ++k) {
          Vector a(2);
          do {
            a << coord(rng), coord(rng);
          } while (a.norm() == 0);
          ns.push_back({a, static_cast<double>(bias(rng)), scales[pick(rng)]});
        }
        break;
      }
      case 2: {
        // one opposite pair and K2 directions closing eps * s_i * a + sum s_k a_k = 0
        const Vector a = unit_vector(rng, d);
        const double b = uniform(rng, -1, 1);
        const double s1 = random_scale(rng);
        const double s2 = random_scale(rng);
        ns.push_back({a, b, s1});
        ns.push_back({-a, -b, s2});
        const double lead = uniform(rng, 0, 1) < 0.5 ? s1 : -s2;
        Vector sum = lead * a;
        if (uniform(rng, 0, 1) < 0.5) {
          const Neuron extra = neuron(unit_vector(rng, d), random_scale(rng));
          sum += extra.s * extra.a;
          ns.push_back(extra);
        }
        const double s_last = random_scale(rng);
        ns.push_back(neuron(-sum / s_last, s_last));
        break;
      }
      case 3: {
        // two opposite pairs on parallel or generic hyperplanes
        const Vector a = unit_vector(rng, d);
        const Vector a2 = uniform(rng, 0, 1) < 0.5 ? Vector(a * uniform(rng, 0.5, 2)) : Vector(unit_vector(rng, d));
        for (const Vector& dir : {a, a2}) {
          const double b = uniform(rng, -1, 1) * dir.norm();
          ns.push_back({dir, b, random_scale(rng)});
          ns.push_back({-dir, -b, random_scale(rng)});
        }
        break;
      }
      case 4: {
        // a cancelled pair plus K2 neurons, sometimes parallel to the pair
        const Vector a = unit_vector(rng, d);
        const double b = uniform(rng, -1, 1);
        const double s = random_scale(rng);
        ns.push_back({a, b, s});
        ns.push_back({-a, -b, -s});
        const int extra = static_cast<int>(uniform(rng, 0, 3));
        for (int k = 0; k < extra; ++k) {
          const Vector dir = uniform(rng, 0, 1) < 0.4 ? Vector(-a * uniform(rng, 0.5, 2)) : unit_vector(rng, d);
          ns.push_back(neuron(dir, random_scale(rng)));
        }
        break;
      }
      default: {
        // two cancelled pairs, or a cancelled pair and a regular pair
        for (int k = 0; k < 2; ++k) {
          const Vector a = unit_vector(rng, d);
          const double b = uniform(rng, -1, 1);
          const double s = random_scale(rng);
          ns.push_back({a, b, s});
          ns.push_back({-a, -b, k == 0 || uniform(rng, 0, 1) < 0.5 ? -s : random_scale(rng)});
        }
        break;
      }
    }
    ShallowNet net = make_net(ActivationKind::relu, d, std::move(ns), uniform(rng, -1, 1));
    if (shallowid::relu_admissibility(net, tol).admissible()) return net;
  }
}

inline double max_relative_gap(const ShallowNet& n1, const ShallowNet& n2, const Points& x) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector p = x.row(i).transpose();
    const double f = shallowid::evaluate(n1, p);
    const double g = shallowid::evaluate(n2, p);
    worst = std::max(worst, std::abs(f - g) / (1.0 + std::abs(f)));
  }
  return worst;
}

/// Independent minimal-neuron oracle for ReLU networks.
///
/// Writes f = sum_H mu_H relu(u_H) + <w, x> + c over distinct hyperplanes. Every H with
/// mu_H != 0 carries a kink, so it needs a neuron; the remaining freedom is the
/// orientation of each such neuron, one extra opposite neuron on a kink hyperplane, or a
/// linear pair. Each candidate layout is fitted by least squares on a grid and accepted
/// only if it reproduces f there.
class MinimalOracle {
 public:
  struct Result {
    std::size_t minimum = 0;
    ShallowNet realization;
  };

  explicit MinimalOracle(Points grid_points, double tol = 1e-8) : x_(std::move(grid_points)), tol_(tol) {}

  Result minimal(const ShallowNet& net) const {
    const Eigen::Index d = net.d;
    std::vector<std::pair<Vector, double>> planes;
    std::vector<double> mu;
    Vector w = Vector::Zero(d);
    for (const auto& n : net.neurons) {
      const double r = n.a.norm();
      const auto p = unit_plane(n.a, n.b);
      const double s = n.s * r;
      const bool flipped = (n.a / r - p.first).norm() > 1e-6;
      std::size_t idx = planes.size();
      for (std::size_t i = 0; i < planes.size(); ++i) {
        if ((planes[i].first - p.first).norm() < 1e-7 && std::abs(planes[i].second - p.second) < 1e-7) idx = i;
      }
      if (idx == planes.size()) {
        planes.push_back(p);
        mu.push_back(0.0);
      }
      mu[idx] += s;
      if (flipped) w -= s * p.first;
    }
    double scale = 1.0;
    for (const auto& n : net.neurons) scale = std::max(scale, std::abs(n.s) * n.a.norm());
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < planes.size(); ++i) {
      if (std::abs(mu[i]) > 1e-9 * scale) support.push_back(i);
    }
    const Vector target = shallowid::evaluate_rows(net, x_);
    const std::size_t n = support.size();

    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<Slot> slots;
      for (std::size_t k = 0; k < n; ++k) slots.push_back({planes[support[k]], ((mask >> k) & 1U) != 0});
      if (auto r = fit(slots, d, target)) return {n, *r};
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      for (std::size_t extra = 0; extra < n; ++extra) {
        std::vector<Slot> slots;
        for (std::size_t k = 0; k < n; ++k) slots.push_back({planes[support[k]], ((mask >> k) & 1U) != 0});
        slots.push_back({planes[support[extra]], ((mask >> extra) & 1U) == 0});
        if (auto r = fit(slots, d, target)) return {n + 1, *r};
      }
    }
    // A linear residual always fits as relu(<r,x>) - relu(-<r,x>) on a fresh hyperplane.
    std::vector<Slot> slots;
    for (std::size_t k = 0; k < n; ++k) slots.push_back({planes[support[k]], false});
    Vector lin = w;
    if (lin.norm() < 1e-12) lin = Vector::Unit(d, 0);
    const auto p = unit_plane(lin, 0.0);
    slots.push_back({p, false});
    slots.push_back({p, true});
    if (auto r = fit(slots, d, target)) return {n + 2, *r};
    throw std::logic_error("oracle found no realization");
  }

 private:
  struct Slot {
    std::pair<Vector, double> plane;
    bool negative;
  };

  std::optional<ShallowNet> fit(const std::vector<Slot>& slots, Eigen::Index d, const Vector& target) const {
    const Eigen::Index rows = x_.rows();
    const Eigen::Index cols = static_cast<Eigen::Index>(slots.size()) + 1;
    Points design(rows, cols);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const double sign = slots[k].negative ? -1.0 : 1.0;
      design.col(static_cast<Eigen::Index>(k)) =
          (sign * ((x_ * slots[k].plane.first).array() + slots[k].plane.second)).cwiseMax(0.0).matrix();
    }
    design.col(cols - 1).setOnes();
    const Vector z = design.colPivHouseholderQr().solve(target);
    const double err = (design * z - target).cwiseAbs().maxCoeff();
    if (err > tol_ * (1.0 + target.cwiseAbs().maxCoeff())) return std::nullopt;
    ShallowNet out = make_net(ActivationKind::relu, d, {}, z(cols - 1));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const double sign = slots[k].negative ? -1.0 : 1.0;
      out.neurons.push_back({sign * slots[k].plane.first, sign * slots[k].plane.second, z(static_cast<Eigen::Index>(k))});
    }
    return out;
  }

  Points x_;
  double tol_;
};

}  // namespace support
