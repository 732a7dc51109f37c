#include "shallowid/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <optional>

#include "shallowid/analytic_id.hpp"
#include "shallowid/io.hpp"
#include "shallowid/relu_adversary.hpp"
#include "shallowid/relu_sampling.hpp"
#include "shallowid/relu_structure.hpp"

namespace shallowid::cli {

namespace {

using io::json;

struct Globals {
  std::uint64_t seed = 0;
  ToleranceConfig tol;
  std::size_t cap = kDefaultPlanCap;
};

struct Paths {
  std::string net, net1, net2, plan, data, points, in, out, reference;
  std::size_t m = 0;
  long long d = 0;
};

void emit(const std::string& path, const json& j) { io::write_atomic(path, io::dump(j)); }

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

json violations_json(const AdmissibilityReport& report) {
  json out = json::array();
  for (const auto& v : report.violations) out.push_back(v.describe());
  return out;
}

void cmd_check(const Paths& p, const Globals& g, std::ostream& out) {
  const ShallowNet net = io::net_from_json(io::read_json(p.net));
  net.validate();
  json result = {{"neurons", net.m()}};
  if (net.activation.analytic()) {
    const AdmissibilityReport report = check_admissible_analytic(net, g.tol);
    result["admissible"] = report.admissible();
    result["violations"] = violations_json(report);
    result["reducible"] = !report.admissible();
    out << (report.admissible() ? "irreducible" : "reducible: " + report.describe()) << "\n";
  } else {
    const AdmissibilityReport report = check_admissible(net, g.tol);
    result["admissible"] = report.admissible();
    result["violations"] = violations_json(report);
    if (!report.admissible()) {
      result["reducible"] = true;
      result["witness"] = nullptr;
      out << "reducible: " << report.describe() << "\n";
    } else {
      const auto w = test_reducible(group(net, g.tol), g.tol);
      result["reducible"] = w.has_value();
      result["witness"] = w ? io::to_json(*w) : json(nullptr);
      out << (w ? "reducible (" + std::string(to_string(w->kind)) + ")" : std::string("irreducible")) << "\n";
    }
  }
  if (!p.out.empty()) emit(p.out, result);
}

void cmd_reduce(const Paths& p, const Globals& g, std::ostream& out) {
  const ShallowNet net = io::net_from_json(io::read_json(p.net));
  net.validate();
  if (net.activation.kind != ActivationKind::relu) throw Error(ErrorKind::input, "reduce expects a ReLU network");
  const ShallowNet reduced = reduce_fully(net, g.tol);
  emit(p.out, io::to_json(reduced));
  out << "neurons: " << net.m() << " -> " << reduced.m() << "\n";
}

void cmd_equiv(const Paths& p, const Globals& g, std::ostream& out) {
  const ShallowNet n1 = io::net_from_json(io::read_json(p.net1), "net1");
  const ShallowNet n2 = io::net_from_json(io::read_json(p.net2), "net2");
  n1.validate();
  n2.validate();
  json result;
  if (n1.activation.analytic() || n2.activation.analytic()) {
    const bool eq = test_equivalent_analytic(n1, n2, g.tol);
    result = {{"equivalent", eq}, {"certificate", nullptr}, {"warning", nullptr}};
    out << (eq ? "equivalent" : "not equivalent") << "\n";
  } else {
    try {
      const auto cert = test_equivalent(n1, n2, g.tol);
      result = {{"equivalent", cert.has_value()},
                {"certificate", cert ? io::to_json(*cert) : json(nullptr)},
                {"warning", nullptr}};
      out << "equivalence certificate: " << (cert ? "found" : "none") << "\n";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::hypothesis) throw;
      result = {{"equivalent", nullptr}, {"certificate", nullptr}, {"warning", e.what()}};
      out << "equivalence certificate: none (undecided: " << e.what() << ")\n";
    }
  }
  if (!p.out.empty()) emit(p.out, result);
}

void cmd_plan_relu(const Paths& p, const Globals& g, std::ostream& out) {
  const ShallowNet net = io::net_from_json(io::read_json(p.net));
  net.validate();
  if (net.activation.kind != ActivationKind::relu) throw Error(ErrorKind::input, "plan-relu expects a ReLU network");
  const GroupedReLU grouped = group(net, g.tol);
  if (test_reducible(grouped, g.tol)) throw Error(ErrorKind::hypothesis, "network is reducible; reduce it first");
  const FeasibleLineSet lines = build_feasible_lines(grouped, g.seed, g.tol);
  const SamplePlan plan = build_sample_plan(grouped, lines, g.seed, g.tol);
  emit(p.out, io::to_json(plan));
  out << "plan: " << plan.size() << " points on " << plan.lines.size() << " lines\n";
}

void cmd_sample(const Paths& p, const Globals&, std::ostream& out) {
  const ShallowNet net = io::net_from_json(io::read_json(p.net));
  net.validate();
  const SamplePlan plan = io::plan_from_json(io::read_json(p.plan));
  if (plan.lines.front().u.size() != net.d) throw Error(ErrorKind::input, "plan and network dimensions differ");
  const LabeledSamples data = sample(net, plan);
  emit(p.out, io::to_json(data));
  out << "samples: " << data.values.size() << "\n";
}

void cmd_reconstruct(const Paths& p, const Globals& g, std::ostream& out) {
  const LabeledSamples data = io::samples_from_json(io::read_json(p.data), g.tol);
  const ShallowNet net = reconstruct(data, g.tol);
  emit(p.out, io::to_json(net));
  out << "reconstructed neurons: " << net.m() << "\n";
  if (!p.reference.empty()) {
    const ShallowNet ref = io::net_from_json(io::read_json(p.reference), "reference");
    ref.validate();
    const auto cert = test_equivalent(ref, net, g.tol);
    out << "equivalence certificate: " << (cert ? "found" : "none") << "\n";
  }
}

void cmd_adversary(const Paths& p, const Globals& g, std::ostream& out) {
  const numerics::Mat<double> pts = io::points_from_json(io::read_json(p.points));
  const AdversarialPair pair = build_pair(pts, p.m, g.seed, g.tol);
  emit(p.out, io::to_json(pair));
  const double agreement = (evaluate_rows(pair.net1, pts) - evaluate_rows(pair.net2, pts)).cwiseAbs().maxCoeff();
  const double gap = std::abs(evaluate(pair.net1, pair.witness) - evaluate(pair.net2, pair.witness));
  out << "agreement gap on " << pts.rows() << " points: " << fmt(agreement) << "\n";
  out << "witness gap: " << fmt(gap) << "\n";
}

void cmd_plan_analytic(const Paths& p, const Globals& g, std::ostream& out) {
  const AnalyticSamplePlan plan = build_analytic_plan(p.m, static_cast<Eigen::Index>(p.d), g.cap);
  emit(p.out, io::to_json(plan));
  out << "analytic plan: " << plan.size() << " points (" << plan.frame.vectors.size() << " frame vectors x "
      << plan.scalars.size() << " scalars)\n";
}

void cmd_verify_analytic(const Paths& p, const Globals& g, std::ostream& out) {
  const ShallowNet n1 = io::net_from_json(io::read_json(p.net1), "net1");
  const ShallowNet n2 = io::net_from_json(io::read_json(p.net2), "net2");
  n1.validate();
  n2.validate();
  const AnalyticSamplePlan plan = io::analytic_plan_from_json(io::read_json(p.plan));
  const IdentificationReport report = verify_identification(n1, n2, plan, g.tol);
  if (!p.out.empty()) emit(p.out, io::to_json(report));
  out << "max gap: " << fmt(report.max_gap) << "\n";
  out << "equal on plan: " << (report.equal_on_plan ? "yes" : "no") << "\n";
  out << "equivalent: " << (report.equivalent ? "yes" : "no") << "\n";
  if (report.warning) out << "warning: " << *report.warning << "\n";
}

void cmd_expsum(const Paths& p, const Globals& g, std::ostream& out) {
  std::vector<double> a, b, s;
  double s0 = 0.0;
  if (!p.net.empty()) {
    ShallowNet net = io::net_from_json(io::read_json(p.net));
    net.validate();
    if (net.d != 1) throw Error(ErrorKind::input, "expsum expects a one-dimensional network");
    if (net.activation.kind == ActivationKind::relu) throw Error(ErrorKind::input, "expsum expects a sigmoid or tanh network");
    if (net.activation.kind == ActivationKind::tanh) net = tanh_as_sigmoid(net);
    for (const auto& n : net.neurons) {
      a.push_back(n.a(0));
      b.push_back(n.b);
      s.push_back(n.s);
    }
    s0 = net.c;
  } else {
    const json j = io::read_json(p.in);
    const auto list = [&](const char* key) {
      if (!j.is_object() || !j.contains(key) || !j[key].is_array()) {
        throw Error(ErrorKind::parse, std::string("expsum input: missing array \"") + key + "\"");
      }
      std::vector<double> v;
      for (const auto& x : j[key]) {
        if (!x.is_number()) throw Error(ErrorKind::parse, std::string("expsum input: ") + key + " must hold numbers");
        v.push_back(x.get<double>());
      }
      return v;
    };
    a = list("a");
    b = list("b");
    s = list("s");
    if (!j.contains("s0") || !j["s0"].is_number()) throw Error(ErrorKind::parse, "expsum input: missing number \"s0\"");
    s0 = j["s0"].get<double>();
  }
  const ExpSumExpansion e = exp_sum_expansion(a, b, s, s0, g.tol);
  emit(p.out, io::to_json(e));
  out << "exponents: " << e.terms.size() << "\n";
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
  err << json{{"error", {{"kind", std::string(kind)}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identifiability tools for shallow neural networks", "shallowid"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Paths p;
  std::optional<double> tol_rank, tol_match, tol_residual;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--tol-rank", tol_rank, "relative singular value threshold");
  app.add_option("--tol-match", tol_match, "parameter matching tolerance");
  app.add_option("--tol-residual", tol_residual, "fit residual tolerance");
  app.add_option("--cap", g.cap, "analytic plan size cap")->capture_default_str();

  auto* check = app.add_subcommand("check", "admissibility and reducibility of a network");
  check->add_option("--net", p.net)->required();
  check->add_option("--out", p.out);
  auto* reduce = app.add_subcommand("reduce", "rewrite a ReLU network with as few neurons as possible");
  reduce->add_option("--net", p.net)->required();
  reduce->add_option("--out", p.out)->required();
  auto* equiv = app.add_subcommand("equiv", "test two networks for equivalence");
  equiv->add_option("--net1", p.net1)->required();
  equiv->add_option("--net2", p.net2)->required();
  equiv->add_option("--out", p.out);
  auto* plan_relu = app.add_subcommand("plan-relu", "feasible lines and sample plan for a ReLU network");
  plan_relu->add_option("--net", p.net)->required();
  plan_relu->add_option("--out", p.out)->required();
  auto* sample_cmd = app.add_subcommand("sample", "evaluate a network on a plan");
  sample_cmd->add_option("--net", p.net)->required();
  sample_cmd->add_option("--plan", p.plan)->required();
  sample_cmd->add_option("--out", p.out)->required();
  auto* recon = app.add_subcommand("reconstruct", "rebuild a ReLU network from plan samples");
  recon->add_option("--data", p.data)->required();
  recon->add_option("--out", p.out)->required();
  recon->add_option("--reference", p.reference, "network to certify the result against");
  auto* adversary = app.add_subcommand("adversary", "two networks that agree on given points");
  adversary->add_option("--points", p.points)->required();
  adversary->add_option("--m", p.m)->required();
  adversary->add_option("--out", p.out)->required();
  auto* plan_an = app.add_subcommand("plan-analytic", "universal sample plan for sigmoid and tanh networks");
  plan_an->add_option("--m", p.m)->required();
  plan_an->add_option("--d", p.d)->required();
  plan_an->add_option("--out", p.out)->required();
  auto* verify = app.add_subcommand("verify-analytic", "compare two analytic networks on a plan");
  verify->add_option("--net1", p.net1)->required();
  verify->add_option("--net2", p.net2)->required();
  verify->add_option("--plan", p.plan)->required();
  verify->add_option("--out", p.out);
  auto* expsum = app.add_subcommand("expsum", "exponential-sum expansion of a 1-D sigmoid network");
  auto* in_opt = expsum->add_option("--in", p.in, "JSON with a, b, s, s0");
  auto* net_opt = expsum->add_option("--net", p.net, "one-dimensional network");
  in_opt->excludes(net_opt);
  expsum->add_option("--out", p.out)->required();

  std::vector<std::string> storage{"shallowid"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "parse", e.what());
    return 3;
  }
  if (*expsum && in_opt->count() + net_opt->count() != 1) {
    report_error(err, "parse", "expsum needs one of --in or --net");
    return 3;
  }

  try {
    if (tol_rank) g.tol.rank_tol = *tol_rank;
    if (tol_match) g.tol.match_tol = *tol_match;
    if (tol_residual) g.tol.residual_tol = *tol_residual;
    g.tol.validate();
    if (p.d < 0) throw Error(ErrorKind::input, "--d must be positive");
    if (*check) cmd_check(p, g, out);
    else if (*reduce) cmd_reduce(p, g, out);
    else if (*equiv) cmd_equiv(p, g, out);
    else if (*plan_relu) cmd_plan_relu(p, g, out);
    else if (*sample_cmd) cmd_sample(p, g, out);
    else if (*recon) cmd_reconstruct(p, g, out);
    else if (*adversary) cmd_adversary(p, g, out);
    else if (*plan_an) cmd_plan_analytic(p, g, out);
    else if (*verify) cmd_verify_analytic(p, g, out);
    else if (*expsum) cmd_expsum(p, g, out);
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::parse ? 3 : 2;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 2;
  }
  return 0;
}

}  // namespace shallowid::cli
