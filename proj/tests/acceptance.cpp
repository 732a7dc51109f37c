#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "shallowid/analytic_id.hpp"
#include "shallowid/cli.hpp"
#include "shallowid/io.hpp"
#include "shallowid/relu_adversary.hpp"
#include "shallowid/relu_sampling.hpp"
#include "shallowid/relu_structure.hpp"
#include "support.hpp"

using namespace shallowid;
using io::json;
namespace fs = std::filesystem;

namespace {

const ToleranceConfig tol;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int run_cli(const std::vector<std::string>& args, std::string* stdout_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (stdout_text) *stdout_text = out.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shallowid_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::size_t choose2(std::size_t n) { return n * (n - 1) / 2; }

Outcome sample_counts() {
  const fs::path dir = scratch("counts");
  std::mt19937_64 rng(1);
  Outcome o;
  int checked = 0;
  for (std::size_t m = 1; m <= 5; ++m) {
    for (Eigen::Index d = 2; d <= 4; ++d) {
      const ShallowNet net = support::random_relu_net(rng, d, m);
      io::write_atomic((dir / "net.json").string(), io::dump(io::to_json(net)));
      const std::string plan = (dir / "plan.json").string();
      if (run_cli({"plan-relu", "--net", (dir / "net.json").string(), "--out", plan, "--seed", std::to_string(m * 10 + d)}) != 0) {
        o.pass = false;
        o.detail += " plan-relu failed at m=" + std::to_string(m) + ",d=" + std::to_string(d);
        continue;
      }
      const auto got = static_cast<std::size_t>(io::plan_from_json(io::read_json(plan)).points().rows());
      if (got != (2 * m + 2) * m * static_cast<std::size_t>(d)) {
        o.pass = false;
        o.detail += " relu m=" + std::to_string(m) + ",d=" + std::to_string(d) + ": " + std::to_string(got);
      }
      ++checked;
    }
  }
  for (std::size_t m = 1; m <= 3; ++m) {
    for (Eigen::Index d = 1; d <= 3; ++d) {
      const std::string plan = (dir / "aplan.json").string();
      if (run_cli({"plan-analytic", "--m", std::to_string(m), "--d", std::to_string(d), "--out", plan}) != 0) {
        o.pass = false;
        o.detail += " plan-analytic failed at m=" + std::to_string(m) + ",d=" + std::to_string(d);
        continue;
      }
      const auto got = static_cast<std::size_t>(io::analytic_plan_from_json(io::read_json(plan)).points().rows());
      const std::size_t expected = (choose2(4 * m) * static_cast<std::size_t>(d - 1) + 1) * (std::size_t{1} << (2 * m));
      if (got != expected) {
        o.pass = false;
        o.detail += " analytic m=" + std::to_string(m) + ",d=" + std::to_string(d) + ": " + std::to_string(got);
      }
      ++checked;
    }
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = std::to_string(checked) + " (m, d) cases exact";
  return o;
}

Outcome relu_round_trip() {
  std::mt19937_64 rng(2);
  int certified = 0;
  double worst = 0.0;
  std::string failures;
  for (int run = 0; run < 100; ++run) {
    const Eigen::Index d = 2 + run % 3;
    const std::size_t m = 1 + static_cast<std::size_t>(run % 5);
    const ShallowNet net = support::random_relu_net(rng, d, m);
    try {
      const GroupedReLU g = group(net, tol);
      if (test_reducible(g, tol)) throw Error(ErrorKind::internal, "generated net is reducible");
      const auto seed = static_cast<std::uint64_t>(1000 + run);
      const SamplePlan plan = build_sample_plan(g, build_feasible_lines(g, seed, tol), seed, tol);
      const ShallowNet rec = reconstruct(sample(net, plan), tol);
      const auto cert = test_equivalent(net, rec, tol);
      const double gap = support::max_relative_gap(net, rec, support::uniform_points(rng, 1000, d, -5, 5));
      worst = std::max(worst, gap);
      if (cert && certificate_holds(*cert, net, rec, tol) && gap <= 1e-8) {
        ++certified;
      } else {
        failures += " run " + std::to_string(run);
      }
    } catch (const Error& e) {
      failures += " run " + std::to_string(run) + " (" + e.what() + ")";
    }
  }
  std::ostringstream s;
  s << certified << "/100 certified, worst relative deviation " << worst << failures;
  return {certified == 100, s.str()};
}

Outcome adversary() {
  std::mt19937_64 rng(3);
  int ok = 0;
  double worst_agree = 0.0, least_gap = INFINITY;
  std::string failures;
  for (int run = 0; run < 50; ++run) {
    const Eigen::Index d = 2 + run % 4;
    const std::size_t m = 2 + static_cast<std::size_t>(run % 5);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(support::uniform(rng, 0, 200));
    const auto pts = support::uniform_points(rng, n, d, -3, 3);
    try {
      const AdversarialPair pair = build_pair(pts, m, static_cast<std::uint64_t>(run), tol);
      const double agree = (evaluate_rows(pair.net1, pts) - evaluate_rows(pair.net2, pts)).cwiseAbs().maxCoeff();
      const double gap = std::abs(evaluate(pair.net1, pair.witness) - evaluate(pair.net2, pair.witness));
      const bool none = !test_equivalent(pair.net1, pair.net2, tol).has_value();
      worst_agree = std::max(worst_agree, agree);
      least_gap = std::min(least_gap, gap);
      if (agree <= 1e-12 && gap >= 1e-6 && none && pair.net1.m() == m && pair.net2.m() == m) {
        ++ok;
      } else {
        failures += " run " + std::to_string(run);
      }
    } catch (const Error& e) {
      failures += " run " + std::to_string(run) + " (" + e.what() + ")";
    }
  }
  std::ostringstream s;
  s << ok << "/50, worst agreement " << worst_agree << ", smallest witness gap " << least_gap << failures;
  return {ok == 50, s.str()};
}

Outcome clauses() {
  support::Points x(1000, 2);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 25; ++j) x.row(i * 25 + j) << -4 + 8.0 * i / 39, -4 + 8.0 * j / 24;
  }
  struct Instance {
    std::string name;
    ShallowNet net;
  };
  const auto relu = [](std::vector<Neuron> ns, double c) { return support::make_net(ActivationKind::relu, 2, std::move(ns), c); };
  std::vector<Instance> cases;
  {
    std::vector<Neuron> ns;
    const Vector dirs[] = {vec({1, 0}), vec({0.6, 0.8}), vec({-0.28, 0.96})};
    for (int k = 0; k < 3; ++k) {
      ns.push_back({dirs[k], 0.3 * k, 1.0 + k});
      ns.push_back({-dirs[k], -0.3 * k, -0.5 + k});
    }
    cases.push_back({"K1 = 3", relu(ns, 0.1)});
  }
  {
    const Vector a = vec({0.8, -0.6}), a2 = vec({0.3, 1.1});
    const double s1 = 1.5, s2 = -0.7, t2 = 0.9, t3 = -1.3;
    // last direction is the negated sum
    const Vector a3 = -(s1 * a + t2 * a2) / t3;
    cases.push_back({"clause (i)", relu({{a, 0.2, s1}, {-a, -0.2, s2}, {a2, -0.3, t2}, {a3, 0.4, t3}}, 0.5)});
  }
  {
    const Vector a1 = vec({1, 0.2}), a2 = vec({-0.4, 1});
    const double p1 = 1.2, q1 = -0.6, p2 = 0.8, q2 = 1.7;
    // third direction is collinear with the residual p1 a1 + p2 a2
    const Vector a3 = 1.4 * (p1 * a1 + p2 * a2);
    cases.push_back({"clause (ii)", relu({{a1, 0.1, p1}, {-a1, -0.1, q1}, {a2, -0.2, p2}, {-a2, 0.2, q2}, {a3, 0.3, -0.9}}, -0.25)});
  }
  cases.push_back({"cancellation", relu({{vec({1, 0}), 0, 1}, {vec({-1, 0}), 0, -1}, {vec({0, 1}), 0, 1}, {vec({0, -1}), 0, -1}}, 0)});

  Outcome o;
  for (const auto& c : cases) {
    try {
      const auto w = test_reducible(group(c.net, tol), tol);
      const ShallowNet r = reduce_fully(c.net, tol);
      const double gap = support::max_relative_gap(c.net, r, x);
      const bool ok = w && r.m() < c.net.m() && gap <= 1e-9;
      std::ostringstream s;
      s << (o.detail.empty() ? "" : " ") << c.name << ": " << (w ? to_string(w->kind) : "irreducible") << ", " << c.net.m() << " -> " << r.m()
        << ", gap " << gap << (ok ? "" : " FAILED") << ";";
      o.detail += s.str();
      o.pass = o.pass && ok;
    } catch (const Error& e) {
      o.pass = false;
      o.detail += " " + c.name + ": " + e.what() + ";";
    }
  }
  return o;
}

Outcome oracle_agreement() {
  const support::MinimalOracle oracle(support::grid(2, 61, -6, 6));
  std::mt19937_64 rng(5);
  std::vector<std::string> flagged;
  for (int run = 0; run < 200; ++run) {
    const ShallowNet net = support::structured_relu_net(rng, run);
    const auto w = test_reducible(group(net, tol), tol);
    const auto ref = oracle.minimal(net);
    const bool oracle_reducible = ref.minimum < net.m();
    if (w.has_value() != oracle_reducible) {
      flagged.push_back("run " + std::to_string(run) + ": library " + (w ? "reducible" : "irreducible") + ", oracle minimum " +
                        std::to_string(ref.minimum) + " of " + std::to_string(net.m()) + ", net " +
                        io::to_json(net).dump());
    }
  }
  for (const auto& f : flagged) std::cout << "  flagged " << f << "\n";
  return {flagged.empty(), std::to_string(200 - flagged.size()) + "/200 agree, flagged " + std::to_string(flagged.size())};
}

ShallowNet random_analytic(std::mt19937_64& rng, ActivationKind kind, Eigen::Index d, std::size_t m) {
  while (true) {
    std::vector<Neuron> ns;
    for (std::size_t k = 0; k < m; ++k) {
      ns.push_back({support::uniform_vector(rng, d, -2, 2), support::uniform(rng, -2, 2), support::uniform(rng, -2, 2)});
    }
    ShallowNet net = support::make_net(kind, d, std::move(ns), support::uniform(rng, -2, 2));
    if (check_admissible_analytic(net, tol).admissible()) return net;
  }
}

Outcome analytic() {
  std::mt19937_64 rng(6);
  int ok = 0;
  double worst_equal = 0.0, least_diff = INFINITY;
  std::string failures;
  for (int run = 0; run < 50; ++run) {
    const ActivationKind kind = run % 2 == 0 ? ActivationKind::sigmoid : ActivationKind::tanh;
    const Eigen::Index d = 1 + run % 3;
    const std::size_t m = 1 + static_cast<std::size_t>((run / 3) % 3);
    const ShallowNet n1 = random_analytic(rng, kind, d, m);
    ShallowNet n2;
    const int variant = run % 4;
    if (variant < 2) {
      // same function: shuffle, flip some neurons and compensate the constant
      n2 = n1;
      std::shuffle(n2.neurons.begin(), n2.neurons.end(), rng);
      for (auto& n : n2.neurons) {
        if (support::uniform(rng, 0, 1) < 0.5) {
          n2.c += n.s * *n2.activation.flip_constant();
          n = {-n.a, -n.b, -n.s};
        }
      }
    } else if (variant == 2) {
      n2 = n1;
      n2.neurons[0].b += 0.1;
    } else {
      n2 = random_analytic(rng, kind, d, m);
    }
    const AnalyticSamplePlan plan = build_analytic_plan(m, d);
    const IdentificationReport report = verify_identification(n1, n2, plan, tol);
    const auto dense = support::uniform_points(rng, 4000, d, -4, 4);
    const double truth_gap = (evaluate_rows(n1, dense) - evaluate_rows(n2, dense)).cwiseAbs().maxCoeff();
    const bool truth = truth_gap <= 1e-9;
    bool good = report.equivalent == truth;
    if (truth) {
      worst_equal = std::max(worst_equal, report.max_gap);
      good = good && report.max_gap <= 1e-10;
    } else {
      least_diff = std::min(least_diff, report.max_gap);
      good = good && report.max_gap > 1e-8;
    }
    if (good) {
      ++ok;
    } else {
      failures += " run " + std::to_string(run);
    }
  }
  std::ostringstream s;
  s << ok << "/50, worst plan gap for equal pairs " << worst_equal << ", smallest plan gap for distinct pairs "
    << least_diff << failures;
  return {ok == 50, s.str()};
}

Outcome exp_sums() {
  std::mt19937_64 rng(7);
  int ok = 0;
  double worst = 0.0;
  std::string failures;
  for (int run = 0; run < 100; ++run) {
    const std::size_t n = 1 + static_cast<std::size_t>(run % 6);
    std::vector<double> a, b, s;
    for (std::size_t k = 0; k < n; ++k) {
      a.push_back(support::uniform(rng, 0.2, 2) * (support::uniform(rng, 0, 1) < 0.5 ? -1 : 1));
      b.push_back(support::uniform(rng, -1, 1));
      s.push_back(support::uniform(rng, -2, 2));
    }
    double s0 = support::uniform(rng, -2, 2);
    // every tenth instance is all zero, every fifth has some zero weights
    if (run % 10 == 0) {
      std::fill(s.begin(), s.end(), 0.0);
      s0 = 0.0;
    } else if (run % 5 == 0) {
      s[0] = 0.0;
    }
    const bool all_zero_input = s0 == 0.0 && std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; });
    const ExpSumExpansion e = exp_sum_expansion(a, b, s, s0, tol);
    double local = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double x = -1.0 + 2.0 * i / 99;
      const double h = exp_sum_h(a, b, s, s0, x);
      local = std::max(local, std::abs(e.evaluate(x) - h) / (1.0 + std::abs(h)));
    }
    double peak = 0.0;
    for (const auto& t : e.terms) peak = std::max(peak, std::abs(t.coefficient));
    const bool all_zero_output = peak <= 1e-12;
    worst = std::max(worst, local);
    if (local <= 1e-9 && all_zero_output == all_zero_input) {
      ++ok;
    } else {
      failures += " run " + std::to_string(run);
    }
  }
  std::ostringstream s;
  s << ok << "/100, worst relative error " << worst << failures;
  return {ok == 100, s.str()};
}

Outcome full_spark() {
  Outcome o;
  int frames = 0;
  for (Eigen::Index d = 1; d <= 4; ++d) {
    for (std::size_t n = static_cast<std::size_t>(d); n <= 12; ++n) {
      const FullSparkCheck c = check_full_spark(vandermonde_frame(d, n), tol);
      ++frames;
      if (!c.full_spark || !c.exhaustive) {
        o.pass = false;
        o.detail += " frame d=" + std::to_string(d) + ",N=" + std::to_string(n) + " failed;";
      }
    }
  }
  std::mt19937_64 rng(8);
  int separated = 0;
  for (int run = 0; run < 100; ++run) {
    const Eigen::Index d = 1 + run % 4;
    const std::size_t m = 1 + static_cast<std::size_t>(support::uniform(rng, 0, 6));
    std::vector<Vector> family;
    while (family.size() < m) {
      const Vector v = support::uniform_vector(rng, d, -1, 1);
      if (std::all_of(family.begin(), family.end(), [&](const Vector& u) { return (u - v).norm() > 1e-3; })) {
        family.push_back(v);
      }
    }
    const std::size_t n = std::max(separating_frame_size(m, d), static_cast<std::size_t>(d));
    try {
      const Vector v = separating_direction(vandermonde_frame(d, n), family, tol);
      bool distinct = true;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < i; ++j) distinct = distinct && std::abs((family[i] - family[j]).dot(v)) > tol.zero_tol;
      }
      if (distinct) ++separated;
    } catch (const Error& e) {
      o.detail += std::string(" separating run ") + std::to_string(run) + ": " + e.what() + ";";
    }
  }
  o.pass = o.pass && separated == 100;
  o.detail = std::to_string(frames) + " frames full spark, " + std::to_string(separated) + "/100 families separated" + o.detail;
  return o;
}

std::vector<std::string> suite_outputs(const fs::path& dir) {
  std::mt19937_64 rng(9);
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  io::write_atomic(p("net.json"), io::dump(io::to_json(support::random_relu_net(rng, 3, 4))));
  io::write_atomic(p("fig1.json"), io::dump(io::to_json(support::figure1_net())));
  io::write_atomic(p("structured.json"), io::dump(io::to_json(support::structured_relu_net(rng, 2))));
  io::write_atomic(p("points.json"), io::dump(json{{"points", [&] {
                                                     json pts = json::array();
                                                     for (int i = 0; i < 30; ++i) {
                                                       pts.push_back({support::uniform(rng, -2, 2), support::uniform(rng, -2, 2),
                                                                      support::uniform(rng, -2, 2)});
                                                     }
                                                     return pts;
                                                   }()}}));
  const ShallowNet s1 = random_analytic(rng, ActivationKind::sigmoid, 2, 2);
  io::write_atomic(p("s1.json"), io::dump(io::to_json(s1)));
  io::write_atomic(p("s2.json"), io::dump(io::to_json(random_analytic(rng, ActivationKind::sigmoid, 2, 2))));
  io::write_atomic(p("one.json"), io::dump(io::to_json(random_analytic(rng, ActivationKind::tanh, 1, 3))));

  const std::vector<std::vector<std::string>> commands = {
      {"check", "--net", p("structured.json"), "--out", p("check.json")},
      {"reduce", "--net", p("structured.json"), "--out", p("reduced.json")},
      {"equiv", "--net1", p("fig1.json"), "--net2", p("fig1.json"), "--out", p("equiv.json")},
      {"plan-relu", "--net", p("net.json"), "--out", p("plan.json"), "--seed", "17"},
      {"sample", "--net", p("net.json"), "--plan", p("plan.json"), "--out", p("samples.json")},
      {"reconstruct", "--data", p("samples.json"), "--out", p("rec.json"), "--reference", p("net.json")},
      {"adversary", "--points", p("points.json"), "--m", "4", "--out", p("pair.json"), "--seed", "17"},
      {"plan-analytic", "--m", "2", "--d", "2", "--out", p("aplan.json")},
      {"verify-analytic", "--net1", p("s1.json"), "--net2", p("s2.json"), "--plan", p("aplan.json"), "--out", p("report.json")},
      {"expsum", "--net", p("one.json"), "--out", p("exp.json")},
  };
  std::vector<std::string> outputs;
  for (const auto& c : commands) {
    std::string text;
    const int code = run_cli(c, &text);
    outputs.push_back(c[0] + " exit " + std::to_string(code) + "\n" + text);
    const auto out_flag = std::find(c.begin(), c.end(), "--out");
    outputs.push_back(slurp(*(out_flag + 1)));
  }
  return outputs;
}

Outcome determinism() {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  auto first = suite_outputs(a);
  auto second = suite_outputs(b);
  std::size_t differing = 0, failed = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] != second[i]) ++differing;
    if (i % 2 == 0 && first[i].find("exit 0") == std::string::npos) ++failed;
  }
  fs::remove_all(a);
  fs::remove_all(b);
  return {differing == 0 && failed == 0, std::to_string(first.size() / 2) + " commands, " + std::to_string(differing) +
                                             " differing outputs, " + std::to_string(failed) + " nonzero exits"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sample-count formulas", sample_counts},
      {"ReLU round-trip identification", relu_round_trip},
      {"impossibility pairs", adversary},
      {"reducibility clauses", clauses},
      {"brute-force oracle agreement", oracle_agreement},
      {"analytic identification", analytic},
      {"exponential-sum expansion", exp_sums},
      {"full spark frames", full_spark},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::ostringstream t;
    t.precision(2);
    t << std::fixed << secs;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " (" << t.str() << " s): "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
