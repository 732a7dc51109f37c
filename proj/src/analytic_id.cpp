#include "shallowid/analytic_id.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace shallowid {

namespace {

void require_analytic(const ShallowNet& net, const char* what) {
  if (!net.activation.analytic()) {
    throw Error(ErrorKind::input, std::string(what) + ": expected a sigmoid or tanh network");
  }
}

bool close(const Vector& x, const Vector& y, double tol) {
  return x.size() == y.size() && (x - y).cwiseAbs().maxCoeff() <= tol;
}

bool lex_less(const Neuron& x, const Neuron& y) {
  for (Eigen::Index i = 0; i < x.a.size(); ++i) {
    if (x.a(i) != y.a(i)) return x.a(i) < y.a(i);
  }
  return x.b < y.b;
}

}  // namespace

AdmissibilityReport check_admissible_analytic(const ShallowNet& net, const ToleranceConfig& tol) {
  require_analytic(net, "check_admissible_analytic");
  net.validate();
  AdmissibilityReport report;
  const std::size_t m = net.m();
  for (std::size_t k = 0; k < m; ++k) {
    const auto& n = net.neurons[k];
    if (n.a.norm() <= tol.zero_tol) {
      report.violations.push_back({AdmissibilityClause::zero_direction, k, std::nullopt});
    } else if (std::abs(n.s) * n.a.norm() <= tol.zero_tol) {
      report.violations.push_back({AdmissibilityClause::zero_scale, k, std::nullopt});
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto& x = net.neurons[i];
      const auto& y = net.neurons[j];
      const bool same = close(x.a, y.a, tol.match_tol) && std::abs(x.b - y.b) <= tol.match_tol;
      const bool opposite = close(x.a, -y.a, tol.match_tol) && std::abs(x.b + y.b) <= tol.match_tol;
      if (same || opposite) report.violations.push_back({AdmissibilityClause::signed_duplicate, i, j});
    }
  }
  return report;
}

ShallowNet AnalyticCanonicalForm::net() const {
  ShallowNet out;
  out.activation = activation;
  out.d = d;
  out.neurons = neurons;
  out.c = c;
  return out;
}

AnalyticCanonicalForm canonicalize_analytic(const ShallowNet& net, const ToleranceConfig& tol) {
  const AdmissibilityReport report = check_admissible_analytic(net, tol);
  if (!report.admissible()) throw Error(ErrorKind::admissibility, report.describe());
  const double c0 = *net.activation.flip_constant();
  AnalyticCanonicalForm out{net.activation, net.d, net.neurons, net.c};
  for (auto& n : out.neurons) {
    int sign = first_significant_sign(n.a, tol.match_tol);
    if (sign == 0) sign = first_significant_sign(n.a, 0.0);
    if (sign < 0) {
      out.c += n.s * c0;
      n.a = -n.a;
      n.b = -n.b;
      n.s = -n.s;
    }
  }
  std::sort(out.neurons.begin(), out.neurons.end(), lex_less);
  return out;
}

bool test_equivalent_analytic(const ShallowNet& n1, const ShallowNet& n2, const ToleranceConfig& tol) {
  require_analytic(n1, "test_equivalent_analytic");
  require_analytic(n2, "test_equivalent_analytic");
  if (!(n1.activation == n2.activation)) throw Error(ErrorKind::input, "networks use different activations");
  if (n1.d != n2.d) throw Error(ErrorKind::input, "networks have different input dimensions");
  const AnalyticCanonicalForm f1 = canonicalize_analytic(n1, tol);
  const AnalyticCanonicalForm f2 = canonicalize_analytic(n2, tol);
  if (f1.neurons.size() != f2.neurons.size()) return false;
  if (std::abs(f1.c - f2.c) > tol.match_tol * (1.0 + std::max(std::abs(f1.c), std::abs(f2.c)))) return false;
  std::vector<bool> used(f2.neurons.size(), false);
  for (const auto& x : f1.neurons) {
    bool matched = false;
    for (std::size_t j = 0; j < f2.neurons.size() && !matched; ++j) {
      const auto& y = f2.neurons[j];
      if (used[j] || !close(x.a, y.a, tol.match_tol) || std::abs(x.b - y.b) > tol.match_tol) continue;
      if (std::abs(x.s - y.s) > tol.match_tol * (1.0 + std::abs(x.s))) continue;
      used[j] = matched = true;
    }
    if (!matched) return false;
  }
  return true;
}

FullSparkFrame vandermonde_frame(Eigen::Index d, std::size_t n) {
  if (d < 1) throw Error(ErrorKind::input, "vandermonde_frame needs d >= 1");
  if (n < static_cast<std::size_t>(d)) throw Error(ErrorKind::input, "vandermonde_frame needs N >= d");
  FullSparkFrame frame;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
    Vector v(d);
    double p = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      v(i) = p;
      p *= t;
    }
    frame.nodes.push_back(t);
    frame.vectors.push_back(std::move(v));
  }
  return frame;
}

FullSparkCheck check_full_spark(const FullSparkFrame& frame, const ToleranceConfig& tol, std::uint64_t seed,
                                std::size_t samples) {
  const std::size_t n = frame.vectors.size();
  if (n == 0) throw Error(ErrorKind::input, "empty frame");
  const Eigen::Index d = frame.vectors.front().size();
  if (n < static_cast<std::size_t>(d)) throw Error(ErrorKind::input, "frame has fewer than d vectors");

  FullSparkCheck out;
  out.min_abs_det = std::numeric_limits<double>::infinity();
  numerics::Mat<double> sub(d, d);
  auto check = [&](const std::vector<std::size_t>& idx) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const Vector& v = frame.vectors[idx[static_cast<std::size_t>(r)]];
      sub.row(r) = v.transpose() / v.norm();
    }
    ++out.subsets_checked;
    out.min_abs_det = std::min(out.min_abs_det, std::abs(sub.determinant()));
    if (numerics::rank(sub, tol) != d) out.full_spark = false;
  };

  if (n <= 12) {
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + d, true);
    do {
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < n; ++j) {
        if (pick[j]) idx.push_back(j);
      }
      check(idx);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
  }
  out.exhaustive = false;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index r = 0; r < d; ++r) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(r), n - 1);
      std::swap(all[static_cast<std::size_t>(r)], all[pick(rng)]);
    }
    check(std::vector<std::size_t>(all.begin(), all.begin() + d));
  }
  return out;
}

std::size_t separating_frame_size(std::size_t vectors, Eigen::Index d) {
  const std::size_t pairs = vectors < 2 ? 0 : vectors * (vectors - 1) / 2;
  return pairs * static_cast<std::size_t>(d - 1) + 1;
}

Vector separating_direction(const FullSparkFrame& frame, const std::vector<Vector>& vectors,
                            const ToleranceConfig& tol) {
  if (frame.vectors.empty()) throw Error(ErrorKind::input, "separating_direction: empty frame");
  const Eigen::Index d = frame.vectors.front().size();
  const std::size_t m = vectors.size();
  if (frame.vectors.size() < separating_frame_size(m, d)) {
    throw Error(ErrorKind::input, "separating_direction: frame of " + std::to_string(frame.vectors.size()) +
                                      " vectors is below the required " + std::to_string(separating_frame_size(m, d)));
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (vectors[i].size() != d) throw Error(ErrorKind::input, "separating_direction: vector dimension mismatch");
    scale = std::max(scale, vectors[i].norm());
    for (std::size_t j = 0; j < i; ++j) {
      if (close(vectors[i], vectors[j], tol.match_tol)) {
        throw Error(ErrorKind::input, "separating_direction: vectors " + std::to_string(j) + " and " +
                                          std::to_string(i) + " coincide");
      }
    }
  }
  for (const Vector& v : frame.vectors) {
    const double floor = tol.zero_tol * (1.0 + scale * v.norm());
    bool separates = true;
    for (std::size_t i = 0; i < m && separates; ++i) {
      for (std::size_t j = 0; j < i && separates; ++j) {
        if (std::abs((vectors[i] - vectors[j]).dot(v)) <= floor) separates = false;
      }
    }
    if (separates) return v;
  }
  throw Error(ErrorKind::tolerance, "separating_direction: no frame vector separates the inputs");
}

numerics::Mat<double> AnalyticSamplePlan::points() const {
  numerics::Mat<double> out(static_cast<Eigen::Index>(size()), d);
  Eigen::Index row = 0;
  for (double z : scalars) {
    for (const Vector& v : frame.vectors) out.row(row++) = z * v.transpose();
  }
  return out;
}

std::optional<std::size_t> analytic_plan_size(std::size_t m, Eigen::Index d) {
  if (m == 0 || d < 1 || m > 31) return std::nullopt;
  const std::size_t scalars = std::size_t{1} << (2 * m);
  const std::size_t n = separating_frame_size(4 * m, d);
  if (n > std::numeric_limits<std::size_t>::max() / scalars) return std::nullopt;
  return n * scalars;
}

AnalyticSamplePlan build_analytic_plan(std::size_t m, Eigen::Index d, std::size_t cap) {
  if (m < 1) throw Error(ErrorKind::input, "build_analytic_plan needs m >= 1");
  if (d < 1) throw Error(ErrorKind::input, "build_analytic_plan needs d >= 1");
  const auto total = analytic_plan_size(m, d);
  if (!total || *total > cap) {
    throw Error(ErrorKind::size, "analytic plan for m=" + std::to_string(m) + ", d=" + std::to_string(d) +
                                     " exceeds the cap of " + std::to_string(cap) + " points");
  }
  AnalyticSamplePlan plan;
  plan.m = m;
  plan.d = d;
  plan.frame = vandermonde_frame(d, separating_frame_size(4 * m, d));
  const std::size_t k = std::size_t{1} << (2 * m);
  for (std::size_t i = 0; i < k; ++i) plan.scalars.push_back(-2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(k - 1));
  return plan;
}

IdentificationReport verify_identification(const ShallowNet& n1, const ShallowNet& n2, const AnalyticSamplePlan& plan,
                                           const ToleranceConfig& tol) {
  require_analytic(n1, "verify_identification");
  require_analytic(n2, "verify_identification");
  if (!(n1.activation == n2.activation)) throw Error(ErrorKind::input, "networks use different activations");
  if (n1.m() != plan.m || n2.m() != plan.m) {
    throw Error(ErrorKind::input, "neuron counts " + std::to_string(n1.m()) + " and " + std::to_string(n2.m()) +
                                      " do not match the plan's m = " + std::to_string(plan.m));
  }
  if (n1.d != plan.d || n2.d != plan.d) throw Error(ErrorKind::input, "network dimension does not match the plan");
  IdentificationReport report;
  report.equivalent = test_equivalent_analytic(n1, n2, tol);
  const numerics::Mat<double> x = plan.points();
  report.max_gap = (evaluate_rows(n1, x) - evaluate_rows(n2, x)).cwiseAbs().maxCoeff();
  report.equal_on_plan = report.max_gap <= tol.residual_tol;
  if (report.equal_on_plan && !report.equivalent) {
    report.warning = "networks agree on the plan but are not equivalent; suspect numerical saturation";
  } else if (!report.equal_on_plan && report.equivalent) {
    report.warning = "equivalent networks differ on the plan beyond residual_tol";
  }
  return report;
}

double ExpSumExpansion::evaluate(double x) const {
  double acc = 0.0;
  for (const auto& t : terms) acc += t.coefficient * std::exp(-t.alpha * x);
  return acc;
}

ExpSumExpansion exp_sum_expansion(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& s, double s0, const ToleranceConfig& tol) {
  const std::size_t n = a.size();
  if (b.size() != n || s.size() != n) throw Error(ErrorKind::input, "exp_sum_expansion: a, b, s differ in length");
  if (n > 20) throw Error(ErrorKind::size, "exp_sum_expansion: n = " + std::to_string(n) + " exceeds 20");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(std::abs(a[k]) > tol.zero_tol)) throw Error(ErrorKind::input, "exp_sum_expansion: a_" + std::to_string(k) + " is zero");
    for (std::size_t j = 0; j < k; ++j) {
      const bool same = std::abs(a[k] - a[j]) <= tol.match_tol && std::abs(b[k] - b[j]) <= tol.match_tol;
      const bool opposite = std::abs(a[k] + a[j]) <= tol.match_tol && std::abs(b[k] + b[j]) <= tol.match_tol;
      if (same || opposite) {
        throw Error(ErrorKind::input, "exp_sum_expansion: neurons " + std::to_string(j) + " and " + std::to_string(k) +
                                          " coincide up to sign");
      }
    }
  }
  const double total = std::accumulate(s.begin(), s.end(), s0);
  std::vector<ExpTerm> raw;
  raw.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double alpha = 0.0;
    double weight = total;
    double logp = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (std::size_t{1} << k)) {
        alpha += a[k];
        weight -= s[k];
        logp -= b[k];
      }
    }
    raw.push_back({alpha, weight * std::exp(logp)});
  }
  std::stable_sort(raw.begin(), raw.end(), [](const ExpTerm& x, const ExpTerm& y) { return x.alpha < y.alpha; });
  ExpSumExpansion out;
  for (const auto& t : raw) {
    if (!out.terms.empty() && t.alpha - out.terms.back().alpha <= tol.match_tol * (1.0 + std::abs(t.alpha))) {
      out.terms.back().coefficient += t.coefficient;
    } else {
      out.terms.push_back(t);
    }
  }
  return out;
}

double exp_sum_h(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& s, double s0,
                 double x) {
  double f = s0;
  double prod = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double u = a[k] * x + b[k];
    f += s[k] * sigmoid(u);
    prod *= 1.0 + std::exp(-u);
  }
  return f * prod;
}

}  // namespace shallowid
