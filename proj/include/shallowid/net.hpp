#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shallowid/error.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using Vector = Vec<double>;

enum class ActivationKind { relu, sigmoid, tanh };

std::string_view to_string(ActivationKind kind);
ActivationKind activation_from_string(std::string_view name);

template <typename Scalar>
Scalar relu(Scalar x) {
  return x > Scalar(0) ? x : Scalar(0);
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

struct Activation {
  ActivationKind kind = ActivationKind::relu;

  /// Value of sigma(x) + sigma(-x): 1 for sigmoid, 0 for tanh, none for relu.
  std::optional<double> flip_constant() const {
    switch (kind) {
      case ActivationKind::sigmoid: return 1.0;
      case ActivationKind::tanh: return 0.0;
      case ActivationKind::relu: break;
    }
    return std::nullopt;
  }

  bool analytic() const { return kind != ActivationKind::relu; }

  template <typename Scalar>
  Scalar operator()(Scalar x) const {
    using std::tanh;
    switch (kind) {
      case ActivationKind::relu: return relu(x);
      case ActivationKind::sigmoid: return sigmoid(x);
      case ActivationKind::tanh: return tanh(x);
    }
    return x;
  }

  friend bool operator==(const Activation&, const Activation&) = default;
};

template <typename Scalar>
struct BasicNeuron {
  Vec<Scalar> a;
  Scalar b{};
  Scalar s{};
};

/// f(x) = sum_k s_k * sigma(<a_k, x> + b_k) + c
template <typename Scalar>
struct BasicShallowNet {
  Activation activation;
  Eigen::Index d = 1;
  std::vector<BasicNeuron<Scalar>> neurons;
  Scalar c{};

  std::size_t m() const { return neurons.size(); }

  void validate() const {
    if (d < 1) throw Error(ErrorKind::input, "network dimension must be positive");
    for (std::size_t k = 0; k < neurons.size(); ++k) {
      if (neurons[k].a.size() != d) {
        throw Error(ErrorKind::input, "neuron " + std::to_string(k) + " has direction of length " +
                                          std::to_string(neurons[k].a.size()) + ", expected " +
                                          std::to_string(d));
      }
    }
  }
};

using Neuron = BasicNeuron<double>;
using ShallowNet = BasicShallowNet<double>;

template <typename Scalar, typename Derived>
Scalar evaluate(const BasicShallowNet<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != net.d) {
    throw Error(ErrorKind::input, "input has dimension " + std::to_string(x.size()) +
                                      ", network expects " + std::to_string(net.d));
  }
  Scalar acc = net.c;
  for (const auto& n : net.neurons) acc += n.s * net.activation(Scalar(n.a.dot(x.derived())) + n.b);
  return acc;
}

/// Evaluates the network at every row of `points`.
template <typename Scalar, typename Derived>
Vec<Scalar> evaluate_rows(const BasicShallowNet<Scalar>& net, const Eigen::MatrixBase<Derived>& points) {
  Vec<Scalar> out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = evaluate(net, points.row(i).transpose());
  return out;
}

/// Sign (+1/-1) of the first entry whose magnitude exceeds `tol`, or 0 if none does.
template <typename Derived>
int first_significant_sign(const Eigen::MatrixBase<Derived>& a, double tol) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a(i)) > tol) return a(i) > 0 ? 1 : -1;
  }
  return 0;
}

/// Zero set of <a, x> + b, stored with unit a.
template <typename Scalar>
struct BasicHyperplane {
  Vec<Scalar> a;
  Scalar b{};

  template <typename Derived>
  Scalar signed_distance(const Eigen::MatrixBase<Derived>& x) const {
    return a.dot(x.derived()) + b;
  }
};

using Hyperplane = BasicHyperplane<double>;

/// Unit normal with the first significant entry positive. Throws on a zero direction.
template <typename Scalar, typename Derived>
BasicHyperplane<Scalar> canonical_hyperplane(const Eigen::MatrixBase<Derived>& a, Scalar b,
                                             const ToleranceConfig& tol) {
  const Scalar norm = a.norm();
  if (!(norm > tol.zero_tol)) throw Error(ErrorKind::input, "hyperplane with zero normal");
  BasicHyperplane<Scalar> h{a / norm, b / norm};
  int sign = first_significant_sign(h.a, tol.match_tol);
  if (sign == 0) sign = first_significant_sign(h.a, 0.0);
  if (sign < 0) {
    h.a = -h.a;
    h.b = -h.b;
  }
  return h;
}

template <typename Scalar>
BasicHyperplane<Scalar> canonical(const BasicHyperplane<Scalar>& h, const ToleranceConfig& tol) {
  return canonical_hyperplane(h.a, h.b, tol);
}

/// Equality of two canonical hyperplanes within match_tol.
bool same_hyperplane(const Hyperplane& h1, const Hyperplane& h2, const ToleranceConfig& tol);

/// Opposite-orientation pair on one hyperplane:
/// s1 * sigma(<a,x> + b) + s2 * sigma(-<a,x> - b), with h canonical.
struct PairedTerm {
  Hyperplane h;
  double s1 = 0.0;
  double s2 = 0.0;
};

/// Single neuron s * sigma(<a,x> + b) with unit a (orientation as given, not canonical).
struct SingleTerm {
  Vector a;
  double b = 0.0;
  double s = 0.0;

  Hyperplane hyperplane(const ToleranceConfig& tol) const { return canonical_hyperplane(a, b, tol); }
};

/// ReLU network in K1/K2 normal form.
struct GroupedReLU {
  Eigen::Index d = 1;
  std::vector<PairedTerm> k1;
  std::vector<SingleTerm> k2;
  double c = 0.0;

  std::size_t m() const { return 2 * k1.size() + k2.size(); }
};

double evaluate(const GroupedReLU& g, const Vector& x);

/// Expands the grouped form back into a plain network (K1 terms first).
ShallowNet to_net(const GroupedReLU& g);

enum class AdmissibilityClause { zero_direction, zero_scale, positive_duplicate, signed_duplicate };

struct Violation {
  AdmissibilityClause clause;
  std::size_t first = 0;
  std::optional<std::size_t> second;

  std::string describe() const;
};

struct AdmissibilityReport {
  std::vector<Violation> violations;

  bool admissible() const { return violations.empty(); }
  std::string describe() const;
};

/// ReLU admissibility: s_k * a_k != 0 and no (a_i, b_i) = lambda * (a_j, b_j) with lambda > 0.
AdmissibilityReport relu_admissibility(const ShallowNet& net, const ToleranceConfig& tol);

/// Rescales every neuron to a unit direction and collects opposite orientations of a
/// hyperplane into K1. Throws Error(admissibility) naming the violated clause.
GroupedReLU group(const ShallowNet& net, const ToleranceConfig& tol);

/// Rewrites a tanh network as a sigmoid network via tanh(u) = 2 * Sigmoid(2u) - 1.
ShallowNet tanh_as_sigmoid(const ShallowNet& net);

}  // namespace shallowid
