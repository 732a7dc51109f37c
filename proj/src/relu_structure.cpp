#include "shallowid/relu_structure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shallowid/numerics.hpp"

namespace shallowid {

AdmissibilityReport check_admissible(const ShallowNet& net, const ToleranceConfig& tol) {
  return relu_admissibility(net, tol);
}

std::string_view to_string(ReductionCase c) {
  switch (c) {
    case ReductionCase::k1_eq_1: return "K1_eq_1";
    case ReductionCase::k1_eq_2: return "K1_eq_2";
    case ReductionCase::k1_ge_3: return "K1_ge_3";
    case ReductionCase::cancellation: return "cancellation";
  }
  return "unknown";
}

namespace {

constexpr std::size_t kMaxSubsetTerms = 24;

bool near_zero(const Vector& v, double scale, const ToleranceConfig& tol) {
  return v.norm() <= tol.zero_tol * (1.0 + scale);
}

bool cancels(const PairedTerm& t, const ToleranceConfig& tol) {
  return std::abs(t.s1 + t.s2) <= tol.zero_tol * (std::abs(t.s1) + std::abs(t.s2));
}

// epsilon_k * s_{k,i_k} * a_k for a K1 entry.
Vector oriented_pair_vector(const PairedTerm& t, int epsilon) {
  return epsilon > 0 ? Vector(t.s1 * t.h.a) : Vector(-t.s2 * t.h.a);
}

double oriented_pair_scale(const PairedTerm& t, int epsilon) { return epsilon > 0 ? std::abs(t.s1) : std::abs(t.s2); }

const Vector& direction(const GroupedReLU& g, const TermRef& r) { return r.in_k1 ? g.k1[r.index].h.a : g.k2[r.index].a; }

// Least-squares c0 for r + c0 * a = 0.
double collinear_coefficient(const Vector& r, const Vector& a, const ToleranceConfig& tol) {
  const numerics::Mat<double> column = a;
  const auto ls = numerics::solve_least_squares(column, -r, tol);
  return ls.solution(0);
}

void validate_grouped(const GroupedReLU& g, const ToleranceConfig& tol) {
  for (std::size_t k = 0; k < g.k1.size(); ++k) {
    const auto& t = g.k1[k];
    if (t.h.a.size() != g.d) throw Error(ErrorKind::input, "K1 entry " + std::to_string(k) + " has wrong dimension");
    if (!(std::abs(t.s1) > tol.zero_tol) || !(std::abs(t.s2) > tol.zero_tol)) {
      throw Error(ErrorKind::admissibility, "K1 entry " + std::to_string(k) + " has a zero scale");
    }
  }
  for (std::size_t k = 0; k < g.k2.size(); ++k) {
    const auto& t = g.k2[k];
    if (t.a.size() != g.d) throw Error(ErrorKind::input, "K2 entry " + std::to_string(k) + " has wrong dimension");
    if (!(std::abs(t.s) > tol.zero_tol)) {
      throw Error(ErrorKind::admissibility, "K2 entry " + std::to_string(k) + " has a zero scale");
    }
  }
}

// Searches K2' (and optionally k0) such that base + sum_{K2'} s_k a_k + c0 a_k0 = 0.
struct SubsetHit {
  std::vector<std::size_t> k2_prime;
  std::optional<TermRef> k0;
  std::optional<double> c0;
};

std::optional<SubsetHit> search_subsets(const GroupedReLU& g, const Vector& base, double base_scale,
                                        const std::vector<TermRef>& k0_candidates, bool allow_plain,
                                        const ToleranceConfig& tol) {
  const std::size_t n2 = g.k2.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n2); ++mask) {
    Vector r = base;
    double scale = base_scale;
    std::vector<std::size_t> subset;
    for (std::size_t k = 0; k < n2; ++k) {
      if (mask & (std::size_t{1} << k)) {
        r += g.k2[k].s * g.k2[k].a;
        scale += std::abs(g.k2[k].s);
        subset.push_back(k);
      }
    }
    if (allow_plain && near_zero(r, scale, tol)) return SubsetHit{subset, std::nullopt, std::nullopt};
    for (const TermRef& ref : k0_candidates) {
      const Vector& a0 = direction(g, ref);
      const double c0 = collinear_coefficient(r, a0, tol);
      if (near_zero(r + c0 * a0, scale + std::abs(c0), tol)) return SubsetHit{subset, ref, c0};
    }
  }
  return std::nullopt;
}

ReductionWitness make_witness(ReductionCase kind, std::vector<int> epsilon) {
  ReductionWitness w;
  w.kind = kind;
  w.i_index.reserve(epsilon.size());
  for (int e : epsilon) w.i_index.push_back(e > 0 ? 1 : 2);
  w.epsilon = std::move(epsilon);
  return w;
}

// Function-preserving bookkeeping used by the rewrites:
//   f(x) = sum_t plus_t * relu(u_t) + minus_t * relu(-u_t) + <lin, x> + c,  u_t = <h_t.a, x> + h_t.b.
struct Expansion {
  struct Term {
    Hyperplane h;
    double plus = 0.0;
    double minus = 0.0;
  };

  Eigen::Index d = 1;
  std::vector<Term> terms;
  Vector lin;
  double c = 0.0;

  // q relu(u) = q relu(-u) + q u
  void move_to_minus(std::size_t t) {
    Term& term = terms[t];
    const double q = term.plus;
    term.minus += q;
    term.plus = 0.0;
    lin += q * term.h.a;
    c += q * term.h.b;
  }

  // q relu(-u) = q relu(u) - q u
  void move_to_plus(std::size_t t) {
    Term& term = terms[t];
    const double q = term.minus;
    term.plus += q;
    term.minus = 0.0;
    lin -= q * term.h.a;
    c -= q * term.h.b;
  }

  // Adds lambda * <h.a, x> using lambda u - lambda b = lambda relu(u) - lambda relu(-u) - lambda b.
  void add_linear_to(std::size_t t, double lambda) {
    Term& term = terms[t];
    term.plus += lambda;
    term.minus -= lambda;
    c -= lambda * term.h.b;
    lin -= lambda * term.h.a;
  }

  // Re-expresses the residual linear part with at most two neurons.
  void absorb_linear(const ToleranceConfig& tol) {
    const double norm = lin.norm();
    if (norm <= tol.zero_tol * (1.0 + norm)) {
      lin.setZero();
      return;
    }
    std::optional<std::size_t> target;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const Vector& a = terms[t].h.a;
      if ((lin - a.dot(lin) * a).norm() > tol.zero_tol * (1.0 + norm)) continue;
      const bool paired = terms[t].plus != 0.0 && terms[t].minus != 0.0;
      if (!target || paired) target = t;
      if (paired) break;
    }
    if (!target) {
      terms.push_back({canonical_hyperplane(lin, 0.0, tol), 0.0, 0.0});
      target = terms.size() - 1;
    }
    add_linear_to(*target, terms[*target].h.a.dot(lin));
    lin.setZero();
  }

  ShallowNet emit(const ToleranceConfig& tol) const {
    double scale = 1.0;
    for (const auto& t : terms) scale = std::max({scale, std::abs(t.plus), std::abs(t.minus)});
    const double floor = tol.zero_tol * scale;
    ShallowNet net;
    net.activation = Activation{ActivationKind::relu};
    net.d = d;
    net.c = c;
    for (const auto& t : terms) {
      if (std::abs(t.plus) > floor) net.neurons.push_back({t.h.a, t.h.b, t.plus});
      if (std::abs(t.minus) > floor) net.neurons.push_back({-t.h.a, -t.h.b, t.minus});
    }
    return net;
  }
};

Expansion expand(const GroupedReLU& g, const ToleranceConfig& tol) {
  Expansion e;
  e.d = g.d;
  e.c = g.c;
  e.lin = Vector::Zero(g.d);
  for (const auto& t : g.k1) e.terms.push_back({t.h, t.s1, t.s2});
  for (const auto& t : g.k2) {
    const Hyperplane h = t.hyperplane(tol);
    if (t.a.dot(h.a) > 0) {
      e.terms.push_back({h, t.s, 0.0});
    } else {
      e.terms.push_back({h, 0.0, t.s});
    }
  }
  return e;
}

std::size_t term_index(const GroupedReLU& g, const TermRef& r) { return r.in_k1 ? r.index : g.k1.size() + r.index; }

// Flips a K2 neuron to the opposite orientation, whichever side it is stored on.
void flip_k2(const GroupedReLU& g, Expansion& e, std::size_t k) {
  const std::size_t t = g.k1.size() + k;
  if (e.terms[t].plus != 0.0) {
    e.move_to_minus(t);
  } else {
    e.move_to_plus(t);
  }
}

[[noreturn]] void stale(const std::string& why) {
  throw Error(ErrorKind::invariant, "reduction witness does not match the network: " + why);
}

// After the flips the residual linear part must equal -c0 * a_k0 (or zero); fold it into k0.
void absorb_into_k0(const GroupedReLU& g, const ReductionWitness& w, Expansion& e, double scale,
                    const ToleranceConfig& tol) {
  Vector target = Vector::Zero(g.d);
  if (w.k0) target = -w.c0.value_or(0.0) * direction(g, *w.k0);
  if (!near_zero(e.lin - target, scale, tol)) stale("linear residual is not cancelled");
  if (w.k0 && w.c0) {
    const std::size_t t = term_index(g, *w.k0);
    e.lin = target;
    e.add_linear_to(t, e.terms[t].h.a.dot(target));
  }
  e.lin.setZero();
}

double total_scale(const GroupedReLU& g) {
  double s = 0.0;
  for (const auto& t : g.k1) s += std::abs(t.s1) + std::abs(t.s2);
  for (const auto& t : g.k2) s += std::abs(t.s);
  return s;
}

void check_indices(const GroupedReLU& g, const ReductionWitness& w) {
  if (w.epsilon.size() != g.k1.size() || w.i_index.size() != g.k1.size()) stale("epsilon has the wrong length");
  for (std::size_t k = 0; k < w.epsilon.size(); ++k) {
    if (std::abs(w.epsilon[k]) != 1) stale("epsilon entries must be +-1");
    if (w.i_index[k] != (w.epsilon[k] > 0 ? 1 : 2)) stale("i_index inconsistent with epsilon");
  }
  for (std::size_t k : w.k2_prime) {
    if (k >= g.k2.size()) stale("K2' index out of range");
  }
  for (std::size_t k : w.cancelled) {
    if (k >= g.k1.size()) stale("cancelled index out of range");
  }
  if (w.k0) {
    if (w.k0->index >= (w.k0->in_k1 ? g.k1.size() : g.k2.size())) stale("k0 out of range");
    if (!w.c0) stale("k0 given without c0");
  }
}

}  // namespace

std::optional<ReductionWitness> test_reducible(const GroupedReLU& g, const ToleranceConfig& tol) {
  validate_grouped(g, tol);
  if (g.k2.size() > kMaxSubsetTerms) {
    throw Error(ErrorKind::size, "test_reducible: #K2 = " + std::to_string(g.k2.size()) + " exceeds the subset-enumeration cap of " +
                                     std::to_string(kMaxSubsetTerms));
  }
  const std::size_t n1 = g.k1.size();

  std::vector<std::size_t> cancelled;
  for (std::size_t k = 0; k < n1; ++k) {
    if (cancels(g.k1[k], tol)) cancelled.push_back(k);
  }
  if (!cancelled.empty()) {
    if (n1 >= 2) {
      ReductionWitness w = make_witness(ReductionCase::cancellation, std::vector<int>(n1, 1));
      w.cancelled = cancelled;
      return w;
    }
    // A lone cancelled pair is the linear function s1 * (<a,x> + b); it can only be
    // absorbed through flips of K2 and at most one extra neuron on a K2 hyperplane.
    std::vector<TermRef> k0s;
    for (std::size_t k = 0; k < g.k2.size(); ++k) k0s.push_back({false, k});
    const PairedTerm& t = g.k1.front();
    if (auto hit = search_subsets(g, t.s1 * t.h.a, std::abs(t.s1), k0s, true, tol)) {
      ReductionWitness w = make_witness(ReductionCase::cancellation, {1});
      w.cancelled = cancelled;
      w.k2_prime = hit->k2_prime;
      w.k0 = hit->k0;
      w.c0 = hit->c0;
      return w;
    }
    return std::nullopt;
  }

  if (n1 >= 3) return make_witness(ReductionCase::k1_ge_3, std::vector<int>(n1, 1));

  if (n1 == 1) {
    for (int eps : {1, -1}) {
      const PairedTerm& t = g.k1.front();
      if (auto hit = search_subsets(g, oriented_pair_vector(t, eps), oriented_pair_scale(t, eps), {}, true, tol)) {
        ReductionWitness w = make_witness(ReductionCase::k1_eq_1, {eps});
        w.k2_prime = hit->k2_prime;
        return w;
      }
    }
    return std::nullopt;
  }

  if (n1 == 2) {
    std::vector<TermRef> k0s{{true, 0}, {true, 1}};
    for (std::size_t k = 0; k < g.k2.size(); ++k) k0s.push_back({false, k});
    for (int e1 : {1, -1}) {
      for (int e2 : {1, -1}) {
        const Vector base = oriented_pair_vector(g.k1[0], e1) + oriented_pair_vector(g.k1[1], e2);
        const double scale = oriented_pair_scale(g.k1[0], e1) + oriented_pair_scale(g.k1[1], e2);
        if (auto hit = search_subsets(g, base, scale, k0s, false, tol)) {
          ReductionWitness w = make_witness(ReductionCase::k1_eq_2, {e1, e2});
          w.k2_prime = hit->k2_prime;
          w.k0 = hit->k0;
          w.c0 = hit->c0;
          return w;
        }
      }
    }
  }
  return std::nullopt;
}

GroupedReLU reduce_once(const GroupedReLU& g, const ReductionWitness& w, const ToleranceConfig& tol) {
  validate_grouped(g, tol);
  check_indices(g, w);
  const std::size_t n1 = g.k1.size();
  Expansion e = expand(g, tol);
  const double scale = total_scale(g);

  auto flip_k1 = [&](std::size_t k) {
    if (w.epsilon[k] > 0) {
      e.move_to_minus(k);
    } else {
      e.move_to_plus(k);
    }
  };

  switch (w.kind) {
    case ReductionCase::k1_eq_1:
    case ReductionCase::k1_eq_2: {
      const std::size_t expected = w.kind == ReductionCase::k1_eq_1 ? 1 : 2;
      if (n1 != expected) stale("#K1 = " + std::to_string(n1));
      if (w.kind == ReductionCase::k1_eq_1 && w.k0) stale("clause (i) takes no k0");
      for (std::size_t k = 0; k < n1; ++k) flip_k1(k);
      for (std::size_t k : w.k2_prime) flip_k2(g, e, k);
      absorb_into_k0(g, w, e, scale, tol);
      break;
    }
    case ReductionCase::k1_ge_3: {
      if (n1 < 3) stale("#K1 = " + std::to_string(n1));
      for (std::size_t k = 0; k < n1; ++k) flip_k1(k);
      e.absorb_linear(tol);
      break;
    }
    case ReductionCase::cancellation: {
      if (w.cancelled.empty()) stale("no cancelled pair recorded");
      for (std::size_t k : w.cancelled) {
        if (!cancels(g.k1[k], tol)) stale("K1 entry " + std::to_string(k) + " does not cancel");
      }
      for (std::size_t k = 0; k < n1; ++k) flip_k1(k);
      if (n1 == 1) {
        for (std::size_t k : w.k2_prime) flip_k2(g, e, k);
        absorb_into_k0(g, w, e, scale, tol);
      } else {
        e.absorb_linear(tol);
      }
      break;
    }
  }

  GroupedReLU out = group(e.emit(tol), tol);
  if (out.m() >= g.m()) {
    throw Error(ErrorKind::invariant, "reduction produced " + std::to_string(out.m()) + " neurons from " +
                                          std::to_string(g.m()));
  }
  return out;
}

ShallowNet reduce_fully(const ShallowNet& net, const ToleranceConfig& tol) {
  ShallowNet current = net;
  bool changed = false;
  std::size_t iterations = 0;
  while (true) {
    const GroupedReLU g = group(current, tol);
    const auto w = test_reducible(g, tol);
    if (!w) return changed ? to_net(g) : net;
    if (++iterations > net.m()) throw Error(ErrorKind::internal, "reduce_fully did not terminate");
    current = to_net(reduce_once(g, *w, tol));
    changed = true;
  }
}

namespace {

void require_distinct_hyperplanes(const ShallowNet& net, const char* which, const ToleranceConfig& tol) {
  if (net.activation.kind != ActivationKind::relu) {
    throw Error(ErrorKind::input, std::string(which) + " is not a ReLU network");
  }
  const AdmissibilityReport report = relu_admissibility(net, tol);
  if (!report.admissible()) throw Error(ErrorKind::hypothesis, std::string(which) + ": " + report.describe());
  if (!group(net, tol).k1.empty()) {
    throw Error(ErrorKind::hypothesis, std::string(which) + " has two neurons on one hyperplane");
  }
}

struct FlipSums {
  Vector direction;
  double offset = 0.0;
  double scale = 0.0;
};

FlipSums flipped_sums(const ShallowNet& n1, const std::vector<std::size_t>& flipped) {
  FlipSums out{Vector::Zero(n1.d), 0.0, 0.0};
  for (std::size_t k : flipped) {
    const auto& n = n1.neurons[k];
    out.direction += n.s * n.a;
    out.offset += n.s * n.b;
    out.scale += std::abs(n.s) * (n.a.norm() + std::abs(n.b));
  }
  return out;
}

}  // namespace

std::optional<EquivalenceCertificate> test_equivalent(const ShallowNet& n1, const ShallowNet& n2,
                                                      const ToleranceConfig& tol) {
  require_distinct_hyperplanes(n1, "first network", tol);
  require_distinct_hyperplanes(n2, "second network", tol);
  if (n1.d != n2.d) throw Error(ErrorKind::input, "networks have different input dimensions");
  if (n1.m() != n2.m()) return std::nullopt;

  const std::size_t m = n1.m();
  std::vector<Hyperplane> h2;
  h2.reserve(m);
  for (const auto& n : n2.neurons) h2.push_back(canonical_hyperplane(n.a, n.b, tol));

  EquivalenceCertificate cert;
  std::vector<bool> used(m, false);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& n = n1.neurons[k];
    const Hyperplane h = canonical_hyperplane(n.a, n.b, tol);
    std::optional<std::size_t> match;
    for (std::size_t j = 0; j < m && !match; ++j) {
      if (!used[j] && same_hyperplane(h, h2[j], tol)) match = j;
    }
    if (!match) return std::nullopt;
    used[*match] = true;
    const auto& other = n2.neurons[*match];
    const int eps = n.a.dot(other.a) > 0 ? 1 : -1;
    const double lambda = other.a.norm() / n.a.norm();
    if (std::abs(n.s / lambda - other.s) > tol.match_tol * (1.0 + std::abs(other.s))) return std::nullopt;
    cert.permutation.push_back(*match);
    cert.epsilon.push_back(eps);
    cert.lambda.push_back(lambda);
    if (eps < 0) cert.flipped.push_back(k);
  }
  const FlipSums sums = flipped_sums(n1, cert.flipped);
  if (sums.direction.norm() > tol.match_tol * (1.0 + sums.scale)) return std::nullopt;
  cert.constant_shift = n2.c - n1.c;
  if (std::abs(cert.constant_shift - sums.offset) > tol.match_tol * (1.0 + std::abs(n1.c) + std::abs(n2.c) + sums.scale)) {
    return std::nullopt;
  }
  return cert;
}

bool certificate_holds(const EquivalenceCertificate& cert, const ShallowNet& n1, const ShallowNet& n2,
                       const ToleranceConfig& tol) {
  const std::size_t m = n1.m();
  if (n2.m() != m || cert.permutation.size() != m || cert.epsilon.size() != m || cert.lambda.size() != m) return false;
  std::vector<bool> seen(m, false);
  std::vector<std::size_t> flipped;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = cert.permutation[k];
    if (j >= m || seen[j]) return false;
    seen[j] = true;
    const int eps = cert.epsilon[k];
    const double lambda = cert.lambda[k];
    if (std::abs(eps) != 1 || !(lambda > 0)) return false;
    if (eps < 0) flipped.push_back(k);
    const auto& a = n1.neurons[k];
    const auto& b = n2.neurons[j];
    const double scale = 1.0 + b.a.norm() + std::abs(b.b);
    if ((eps * lambda * a.a - b.a).norm() > tol.match_tol * scale) return false;
    if (std::abs(eps * lambda * a.b - b.b) > tol.match_tol * scale) return false;
    if (std::abs(a.s / lambda - b.s) > tol.match_tol * (1.0 + std::abs(b.s))) return false;
  }
  if (flipped != cert.flipped) return false;
  const FlipSums sums = flipped_sums(n1, flipped);
  if (sums.direction.norm() > tol.match_tol * (1.0 + sums.scale)) return false;
  return std::abs(n2.c - n1.c - sums.offset) <= tol.match_tol * (1.0 + std::abs(n1.c) + std::abs(n2.c) + sums.scale);
}

}  // namespace shallowid
