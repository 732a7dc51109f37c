#include "shallowid/relu_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace shallowid {

namespace {

constexpr int kAttempts = 1000;
constexpr std::size_t kMaxOrientationNeurons = 20;
// Conditioning margins for drawn lines.
constexpr double kMinDirectionNorm = 0.1;
constexpr double kMinIncidence = 0.05;
constexpr double kMinCrossingGap = 1e-3;
constexpr double kSpanRankTol = 1e-6;
constexpr double kJitter = 0.05;
constexpr double kGatherTol = 1e-4;

Vector draw_cube(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(d);
  for (Eigen::Index i = 0; i < d; ++i) x(i) = dist(rng);
  return x;
}

std::vector<Hyperplane> hyperplanes_of(const GroupedReLU& g, const ToleranceConfig& tol) {
  if (!g.k1.empty()) throw Error(ErrorKind::hypothesis, "network has two neurons on one hyperplane");
  std::vector<Hyperplane> hs;
  hs.reserve(g.k2.size());
  for (const auto& t : g.k2) hs.push_back(t.hyperplane(tol));
  return hs;
}

// Affine rank of the rows of `pts` equals rows - 1.
bool affinely_independent(const numerics::Mat<double>& pts, const ToleranceConfig& tol) {
  if (pts.rows() < 2) return true;
  const numerics::Mat<double> diffs = pts.bottomRows(pts.rows() - 1).rowwise() - pts.row(0);
  return numerics::rank(diffs, tol) == pts.rows() - 1;
}

// Checks every (d-1)-subset of earlier crossings on `h` together with `z`.
bool spans_with_previous(const std::vector<Vector>& previous, const Vector& z, Eigen::Index d,
                         const ToleranceConfig& tol) {
  const std::size_t need = static_cast<std::size_t>(d - 1);
  if (previous.size() < need) return true;
  std::vector<bool> pick(previous.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(need), true);
  numerics::Mat<double> pts(d, d);
  do {
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < previous.size(); ++i) {
      if (pick[i]) pts.row(r++) = previous[i].transpose();
    }
    pts.row(r) = z.transpose();
    if (!affinely_independent(pts, tol)) return false;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return true;
}

std::vector<double> plan_params(const std::vector<double>& w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-kJitter, kJitter);
  std::vector<double> t;
  t.reserve(2 * w.size() + 2);
  t.push_back(w.front() - 2.0 + jitter(rng));
  t.push_back(w.front() - 1.0 + jitter(rng));
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    const double width = w[k + 1] - w[k];
    t.push_back(w[k] + width * (1.0 / 3.0 + jitter(rng)));
    t.push_back(w[k] + width * (2.0 / 3.0 + jitter(rng)));
  }
  t.push_back(w.back() + 1.0 + jitter(rng));
  t.push_back(w.back() + 2.0 + jitter(rng));
  return t;
}

bool on_line(const Line& line, const double* x, Eigen::Index d, const ToleranceConfig& tol) {
  const Eigen::Map<const Vector> p(x, d);
  const Vector r = p - line.u;
  const double t = r.dot(line.v) / line.v.squaredNorm();
  return (r - t * line.v).norm() <= tol.match_tol * (1.0 + p.norm());
}

// Condition (b): every collinear triple of plan points lies on one of the plan lines.
bool collinear_triples_on_lines(const SamplePlan& plan, const ToleranceConfig& tol) {
  const numerics::Mat<double> pts_cm = plan.points();
  const Eigen::Index n = pts_cm.rows();
  const Eigen::Index d = pts_cm.cols();
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat pts = pts_cm;
  std::vector<std::size_t> line_of;
  for (std::size_t j = 0; j < plan.lines.size(); ++j) line_of.insert(line_of.end(), plan.params[j].size(), j);

  const double thr = tol.match_tol * tol.match_tol;
  std::vector<double> p(static_cast<std::size_t>(d));
  std::vector<double> q(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* xi = pts.row(i).data();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double* xj = pts.row(j).data();
      double pp = 0.0;
      for (Eigen::Index r = 0; r < d; ++r) {
        p[r] = xj[r] - xi[r];
        pp += p[r] * p[r];
      }
      for (Eigen::Index k = j + 1; k < n; ++k) {
        if (line_of[i] == line_of[j] && line_of[j] == line_of[k]) continue;
        const double* xk = pts.row(k).data();
        double qq = 0.0;
        double pq = 0.0;
        for (Eigen::Index r = 0; r < d; ++r) {
          q[r] = xk[r] - xi[r];
          qq += q[r] * q[r];
          pq += p[r] * q[r];
        }
        const double gram = pp * qq - pq * pq;
        if (gram > thr * pp * qq) continue;
        bool covered = false;
        for (const Line& line : plan.lines) {
          if (on_line(line, xi, d, tol) && on_line(line, xj, d, tol) && on_line(line, xk, d, tol)) {
            covered = true;
            break;
          }
        }
        if (!covered) return false;
      }
    }
  }
  return true;
}

}  // namespace

std::size_t SamplePlan::size() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

numerics::Mat<double> SamplePlan::points() const {
  if (params.size() != lines.size()) throw Error(ErrorKind::input, "plan has mismatched lines and params");
  const Eigen::Index d = lines.empty() ? 0 : lines.front().u.size();
  numerics::Mat<double> out(static_cast<Eigen::Index>(size()), d);
  Eigen::Index row = 0;
  for (std::size_t j = 0; j < lines.size(); ++j) {
    for (double t : params[j]) out.row(row++) = lines[j].at(t).transpose();
  }
  return out;
}

FeasibleLineSet build_feasible_lines(const GroupedReLU& g, std::uint64_t seed, const ToleranceConfig& tol) {
  const std::vector<Hyperplane> hs = hyperplanes_of(g, tol);
  const std::size_t m = hs.size();
  const Eigen::Index d = g.d;
  if (m == 0) throw Error(ErrorKind::input, "build_feasible_lines needs at least one neuron");
  if (d < 2) throw Error(ErrorKind::input, "build_feasible_lines needs d >= 2");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = i + 1; k < m; ++k) {
      if (same_hyperplane(hs[i], hs[k], tol)) throw Error(ErrorKind::input, "network has coincident hyperplanes");
    }
  }

  ToleranceConfig span_tol = tol;
  span_tol.rank_tol = std::max(tol.rank_tol, kSpanRankTol);

  std::mt19937_64 rng(seed);
  const std::size_t count = m * static_cast<std::size_t>(d);
  FeasibleLineSet out;
  std::vector<std::vector<Vector>> on_plane(m);
  std::vector<Vector> all_crossings;

  for (std::size_t j = 0; j < count; ++j) {
    bool accepted = false;
    for (int attempt = 0; attempt < kAttempts && !accepted; ++attempt) {
      Line line{draw_cube(rng, d), draw_cube(rng, d)};
      const double vn = line.v.norm();
      if (vn < kMinDirectionNorm) continue;

      std::vector<std::pair<double, std::size_t>> hits;
      bool ok = true;
      for (std::size_t k = 0; k < m && ok; ++k) {
        const double av = hs[k].a.dot(line.v);
        if (std::abs(av) < kMinIncidence * vn) ok = false;
        hits.emplace_back(-(hs[k].a.dot(line.u) + hs[k].b) / av, k);
      }
      if (!ok) continue;
      std::sort(hits.begin(), hits.end());
      for (std::size_t k = 0; k + 1 < m && ok; ++k) {
        const double t = hits[k].first;
        if (hits[k + 1].first - t < kMinCrossingGap * (1.0 + std::abs(t))) ok = false;
      }
      if (!ok) continue;

      std::vector<Vector> z;
      for (const auto& [t, k] : hits) z.push_back(line.at(t));
      for (const Vector& p : z) {
        for (const Vector& q : all_crossings) {
          if ((p - q).norm() <= tol.match_tol * (1.0 + p.norm())) ok = false;
        }
      }
      for (std::size_t i = 0; i < m && ok; ++i) {
        ok = spans_with_previous(on_plane[hits[i].second], z[i], d, span_tol);
      }
      if (ok && j + 1 == count) {
        numerics::Mat<double> dirs(static_cast<Eigen::Index>(count), d);
        for (std::size_t i = 0; i + 1 < count; ++i) dirs.row(static_cast<Eigen::Index>(i)) = out.lines[i].v.transpose();
        dirs.row(static_cast<Eigen::Index>(count - 1)) = line.v.transpose();
        ok = numerics::rank(dirs, tol) == d;
      }
      if (!ok) continue;

      std::vector<double> ts;
      std::vector<std::size_t> assign;
      for (std::size_t i = 0; i < m; ++i) {
        ts.push_back(hits[i].first);
        assign.push_back(hits[i].second);
        on_plane[hits[i].second].push_back(z[i]);
        all_crossings.push_back(z[i]);
      }
      out.lines.push_back(std::move(line));
      out.crossings.push_back(std::move(ts));
      out.assignment.push_back(std::move(assign));
      accepted = true;
    }
    if (!accepted) {
      throw Error(ErrorKind::construction, "no feasible line " + std::to_string(j) + " after " +
                                               std::to_string(kAttempts) + " attempts");
    }
  }
  return out;
}

SamplePlan build_sample_plan(const GroupedReLU& g, const FeasibleLineSet& ls, std::uint64_t seed,
                             const ToleranceConfig& tol) {
  const std::size_t m = g.m();
  if (!g.k1.empty()) throw Error(ErrorKind::hypothesis, "network has two neurons on one hyperplane");
  if (ls.lines.size() != m * static_cast<std::size_t>(g.d) || ls.crossings.size() != ls.lines.size()) {
    throw Error(ErrorKind::input, "line set does not have m*d lines");
  }
  for (const auto& w : ls.crossings) {
    if (w.size() != m || !std::is_sorted(w.begin(), w.end())) {
      throw Error(ErrorKind::input, "line set crossings must be m sorted parameters per line");
    }
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    SamplePlan plan;
    plan.lines = ls.lines;
    for (const auto& w : ls.crossings) plan.params.push_back(plan_params(w, rng));
    if (collinear_triples_on_lines(plan, tol)) return plan;
  }
  throw Error(ErrorKind::construction, "collinearity condition unsatisfied after " + std::to_string(kAttempts) +
                                           " jitters");
}

LabeledSamples sample(const ShallowNet& net, const SamplePlan& plan) {
  return {plan, evaluate_rows(net, plan.points())};
}

Breakpoints extract_breakpoints(const std::vector<double>& params, const std::vector<double>& values,
                                const ToleranceConfig& tol) {
  const std::size_t n = params.size();
  if (values.size() != n) throw Error(ErrorKind::input, "extract_breakpoints: params and values differ in length");
  if (n < 4 || n % 2 != 0) {
    throw Error(ErrorKind::input, "extract_breakpoints: need 2m+2 samples, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(params[i] < params[i + 1])) throw Error(ErrorKind::input, "extract_breakpoints: params not sorted");
  }
  std::vector<AffinePiece> raw;
  double slope_scale = 0.0;
  for (std::size_t i = 0; i < n; i += 2) {
    const double p = (values[i + 1] - values[i]) / (params[i + 1] - params[i]);
    raw.push_back({p, values[i] - p * params[i]});
    slope_scale = std::max(slope_scale, std::abs(p));
  }
  Breakpoints out;
  out.pieces.push_back(raw.front());
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const AffinePiece& prev = out.pieces.back();
    const AffinePiece& cur = raw[i];
    if (std::abs(cur.slope - prev.slope) <= tol.match_tol * (1.0 + slope_scale)) continue;
    out.params.push_back((prev.intercept - cur.intercept) / (cur.slope - prev.slope));
    out.pieces.push_back(cur);
  }
  return out;
}

std::vector<Hyperplane> recover_hyperplanes(const std::vector<std::vector<Vector>>& crossing_points, std::size_t m,
                                            const ToleranceConfig& tol) {
  if (m == 0) return {};
  const std::size_t lines = crossing_points.size();
  Eigen::Index d = 0;
  for (const auto& line : crossing_points) {
    if (!line.empty()) {
      d = line.front().size();
      break;
    }
  }
  if (d == 0) throw Error(ErrorKind::input, "recover_hyperplanes: no crossing points");
  if (lines < static_cast<std::size_t>(d)) {
    throw Error(ErrorKind::input, "recover_hyperplanes: need at least d lines");
  }

  auto gather = [&](const Hyperplane& h, double rel, bool strict, numerics::Mat<double>& pts) {
    pts.resize(static_cast<Eigen::Index>(lines), d);
    for (std::size_t j = 0; j < lines; ++j) {
      int hits = 0;
      double best = 0.0;
      for (const Vector& p : crossing_points[j]) {
        const double dist = std::abs(h.signed_distance(p));
        if (dist > rel * (1.0 + p.norm())) continue;
        if (hits == 0 || dist < best) {
          best = dist;
          pts.row(static_cast<Eigen::Index>(j)) = p.transpose();
        }
        ++hits;
      }
      if (hits == 0 || (strict && hits != 1)) return false;
    }
    return true;
  };

  std::vector<Hyperplane> found;
  std::vector<bool> pick(lines, false);
  std::fill(pick.begin(), pick.begin() + d, true);
  do {
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < lines; ++j) {
      if (pick[j]) chosen.push_back(j);
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      bool valid = true;
      numerics::Mat<double> tuple(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const auto& pts = crossing_points[chosen[static_cast<std::size_t>(r)]];
        if (idx[static_cast<std::size_t>(r)] >= pts.size()) {
          valid = false;
          break;
        }
        tuple.row(r) = pts[idx[static_cast<std::size_t>(r)]].transpose();
      }
      if (valid) {
        try {
          const Hyperplane h = numerics::affine_fit(tuple, tol).hyperplane;
          const bool known = std::any_of(found.begin(), found.end(),
                                         [&](const Hyperplane& f) { return same_hyperplane(f, h, tol); });
          numerics::Mat<double> all;
          if (!known && gather(h, kGatherTol, false, all)) {
            const Hyperplane refit = numerics::affine_fit(all, tol).hyperplane;
            numerics::Mat<double> strict;
            const bool dup = std::any_of(found.begin(), found.end(),
                                         [&](const Hyperplane& f) { return same_hyperplane(f, refit, tol); });
            if (!dup && gather(refit, tol.match_tol, true, strict)) {
              found.push_back(refit);
              if (found.size() == m) break;
            }
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::degenerate) throw;
        }
      }
      std::size_t r = 0;
      while (r < idx.size() && ++idx[r] >= crossing_points[chosen[r]].size()) idx[r++] = 0;
      if (r == idx.size()) break;
    }
    if (found.size() == m) break;
  } while (std::prev_permutation(pick.begin(), pick.end()));

  if (found.size() != m) {
    throw Error(ErrorKind::recovery, "recovered " + std::to_string(found.size()) + " hyperplanes, expected " +
                                         std::to_string(m));
  }
  std::sort(found.begin(), found.end(), [](const Hyperplane& x, const Hyperplane& y) {
    for (Eigen::Index i = 0; i < x.a.size(); ++i) {
      if (x.a(i) != y.a(i)) return x.a(i) < y.a(i);
    }
    return x.b < y.b;
  });
  return found;
}

ShallowNet reconstruct(const LabeledSamples& data, const ToleranceConfig& tol) {
  const SamplePlan& plan = data.plan;
  if (plan.lines.empty()) throw Error(ErrorKind::input, "reconstruct: plan has no lines");
  if (static_cast<std::size_t>(data.values.size()) != plan.size()) {
    throw Error(ErrorKind::input, "reconstruct: " + std::to_string(data.values.size()) + " values for " +
                                      std::to_string(plan.size()) + " plan points");
  }
  const Eigen::Index d = plan.lines.front().u.size();
  const std::size_t per_line = plan.params.front().size();
  for (const auto& p : plan.params) {
    if (p.size() != per_line) throw Error(ErrorKind::input, "reconstruct: lines carry different sample counts");
  }

  std::vector<Breakpoints> bps;
  std::size_t offset = 0;
  std::size_t m = 0;
  for (std::size_t j = 0; j < plan.lines.size(); ++j) {
    const std::vector<double> vals(data.values.data() + offset, data.values.data() + offset + per_line);
    offset += per_line;
    bps.push_back(extract_breakpoints(plan.params[j], vals, tol));
    m = std::max(m, bps.back().params.size());
  }

  ShallowNet net;
  net.activation = Activation{ActivationKind::relu};
  net.d = d;
  if (m == 0) {
    net.c = data.values.mean();
    return net;
  }
  if (m > kMaxOrientationNeurons) {
    throw Error(ErrorKind::size, "reconstruct: orientation search capped at " + std::to_string(kMaxOrientationNeurons) +
                                     " neurons");
  }
  std::vector<std::vector<Vector>> crossings;
  for (std::size_t j = 0; j < plan.lines.size(); ++j) {
    if (bps[j].params.size() != m) {
      throw Error(ErrorKind::recovery, "line " + std::to_string(j) + " shows " + std::to_string(bps[j].params.size()) +
                                           " breakpoints, other lines show " + std::to_string(m));
    }
    std::vector<Vector> pts;
    for (double t : bps[j].params) pts.push_back(plan.lines[j].at(t));
    crossings.push_back(std::move(pts));
  }
  const std::vector<Hyperplane> hs = recover_hyperplanes(crossings, m, tol);

  const numerics::Mat<double> x = plan.points();
  const Eigen::Index n = x.rows();
  numerics::Mat<double> u(n, static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    u.col(static_cast<Eigen::Index>(k)) = (x * hs[k].a).array() + hs[k].b;
  }
  const double scale = std::max(1.0, data.values.norm());
  numerics::Mat<double> design(n, static_cast<Eigen::Index>(m) + 1);
  design.col(static_cast<Eigen::Index>(m)).setOnes();
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    for (std::size_t k = 0; k < m; ++k) {
      const double eps = (mask >> k) & 1U ? -1.0 : 1.0;
      design.col(static_cast<Eigen::Index>(k)) = (eps * u.col(static_cast<Eigen::Index>(k))).cwiseMax(0.0);
    }
    const auto ls = numerics::solve_least_squares(design, data.values, tol);
    if (ls.residual_norm > tol.residual_tol * scale) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const double eps = (mask >> k) & 1U ? -1.0 : 1.0;
      net.neurons.push_back({eps * hs[k].a, eps * hs[k].b, ls.solution(static_cast<Eigen::Index>(k))});
    }
    net.c = ls.solution(static_cast<Eigen::Index>(m));
    return net;
  }
  throw Error(ErrorKind::recovery, "reconstruct: no orientation assignment fits the samples");
}

}  // namespace shallowid
