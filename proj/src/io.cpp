#include "shallowid/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace shallowid::io {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::parse, where + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(where, "missing field \"" + key + "\"");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(where, "number is not finite");
  return x;
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long long>();
}

const json& array(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  return j;
}

Vector vector(const json& j, const std::string& where, Eigen::Index d = -1) {
  array(j, where);
  if (d >= 0 && static_cast<Eigen::Index>(j.size()) != d) {
    fail(where, "expected " + std::to_string(d) + " entries, got " + std::to_string(j.size()));
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<double> reals(const json& j, const std::string& where) {
  array(j, where);
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json rows_to_json(const numerics::Mat<double>& x) {
  json out = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(to_json(Vector(x.row(i).transpose())));
  return out;
}

}  // namespace

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::input, "cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw Error(ErrorKind::input, "write failed for " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorKind::input, "cannot rename " + tmp + " to " + path);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const ShallowNet& net) {
  json neurons = json::array();
  for (const auto& n : net.neurons) neurons.push_back({{"a", to_json(n.a)}, {"b", n.b}, {"s", n.s}});
  return {{"activation", std::string(to_string(net.activation.kind))}, {"d", net.d}, {"neurons", neurons}, {"c", net.c}};
}

ShallowNet net_from_json(const json& j, const std::string& where) {
  ShallowNet net;
  const json& act = field(j, "activation", where);
  if (!act.is_string()) fail(where + ".activation", "expected a string");
  try {
    net.activation.kind = activation_from_string(act.get<std::string>());
  } catch (const Error& e) {
    fail(where + ".activation", e.what());
  }
  const long long d = integer(field(j, "d", where), where + ".d");
  if (d < 1) fail(where + ".d", "must be positive");
  net.d = static_cast<Eigen::Index>(d);
  const json& neurons = array(field(j, "neurons", where), where + ".neurons");
  for (std::size_t k = 0; k < neurons.size(); ++k) {
    const std::string at = where + ".neurons[" + std::to_string(k) + "]";
    Neuron n;
    n.a = vector(field(neurons[k], "a", at), at + ".a", net.d);
    n.b = number(field(neurons[k], "b", at), at + ".b");
    n.s = number(field(neurons[k], "s", at), at + ".s");
    net.neurons.push_back(std::move(n));
  }
  net.c = number(field(j, "c", where), where + ".c");
  return net;
}

json to_json(const EquivalenceCertificate& cert) {
  return {{"permutation", cert.permutation},
          {"epsilon", cert.epsilon},
          {"lambda", cert.lambda},
          {"K", cert.flipped},
          {"constant_shift", cert.constant_shift}};
}

json to_json(const ReductionWitness& w) {
  json out = {{"case", std::string(to_string(w.kind))},
              {"epsilon", w.epsilon},
              {"i_index", w.i_index},
              {"K2_prime", w.k2_prime},
              {"k0", nullptr},
              {"c0", nullptr},
              {"cancelled", w.cancelled}};
  if (w.k0) out["k0"] = {{"group", w.k0->in_k1 ? "K1" : "K2"}, {"index", w.k0->index}};
  if (w.c0) out["c0"] = *w.c0;
  return out;
}

json to_json(const SamplePlan& plan) {
  json lines = json::array();
  for (const auto& l : plan.lines) lines.push_back({{"u", to_json(l.u)}, {"v", to_json(l.v)}});
  return {{"lines", lines}, {"params", plan.params}};
}

SamplePlan plan_from_json(const json& j, const std::string& where) {
  SamplePlan plan;
  const json& lines = array(field(j, "lines", where), where + ".lines");
  const json& params = array(field(j, "params", where), where + ".params");
  if (lines.empty()) fail(where + ".lines", "plan has no lines");
  if (params.size() != lines.size()) fail(where + ".params", "expected one parameter list per line");
  Eigen::Index d = -1;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string at = where + ".lines[" + std::to_string(i) + "]";
    Line l;
    l.u = vector(field(lines[i], "u", at), at + ".u", d);
    d = l.u.size();
    if (d < 1) fail(at + ".u", "empty base point");
    l.v = vector(field(lines[i], "v", at), at + ".v", d);
    if (l.v.norm() == 0.0) fail(at + ".v", "zero direction");
    plan.lines.push_back(std::move(l));
    plan.params.push_back(reals(params[i], where + ".params[" + std::to_string(i) + "]"));
  }
  return plan;
}

json to_json(const LabeledSamples& data) {
  return {{"plan_ref", to_json(data.plan)},
          {"points", rows_to_json(data.plan.points())},
          {"values", to_json(data.values)}};
}

LabeledSamples samples_from_json(const json& j, const ToleranceConfig& tol) {
  LabeledSamples data;
  const json& ref = field(j, "plan_ref", "samples");
  if (ref.is_string()) {
    data.plan = plan_from_json(read_json(ref.get<std::string>()), ref.get<std::string>());
  } else {
    data.plan = plan_from_json(ref, "samples.plan_ref");
  }
  const std::size_t n = data.plan.size();
  data.values = vector(field(j, "values", "samples"), "samples.values");
  if (static_cast<std::size_t>(data.values.size()) != n) {
    fail("samples.values", "expected " + std::to_string(n) + " values, got " + std::to_string(data.values.size()));
  }
  const json& points = array(field(j, "points", "samples"), "samples.points");
  if (points.size() != n) fail("samples.points", "expected " + std::to_string(n) + " points");
  const numerics::Mat<double> expected = data.plan.points();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string at = "samples.points[" + std::to_string(i) + "]";
    const Vector p = vector(points[i], at, expected.cols());
    const Vector e = expected.row(static_cast<Eigen::Index>(i)).transpose();
    if ((p - e).norm() > tol.match_tol * (1.0 + e.norm())) fail(at, "point is not on the plan");
  }
  return data;
}

json to_json(const AdversarialPair& pair) {
  json extras = json::array();
  for (const auto& n : pair.params.extra_neurons) extras.push_back({{"a", to_json(n.a)}, {"b", n.b}, {"s", n.s}});
  return {{"net1", to_json(pair.net1)},
          {"net2", to_json(pair.net2)},
          {"witness", to_json(pair.witness)},
          {"params",
           {{"w", to_json(pair.params.w)},
            {"b", pair.params.b},
            {"n", to_json(pair.params.n)},
            {"eps", pair.params.eps},
            {"eps_prime", pair.params.eps_prime},
            {"extra_neurons", extras}}}};
}

json to_json(const AnalyticSamplePlan& plan) {
  return {{"m", plan.m}, {"d", plan.d}, {"nodes", plan.frame.nodes}, {"scalars", plan.scalars}};
}

AnalyticSamplePlan analytic_plan_from_json(const json& j) {
  const std::string where = "analytic_plan";
  AnalyticSamplePlan plan;
  const long long m = integer(field(j, "m", where), where + ".m");
  const long long d = integer(field(j, "d", where), where + ".d");
  if (m < 1) fail(where + ".m", "must be positive");
  if (d < 1) fail(where + ".d", "must be positive");
  plan.m = static_cast<std::size_t>(m);
  plan.d = static_cast<Eigen::Index>(d);
  const std::vector<double> nodes = reals(field(j, "nodes", where), where + ".nodes");
  if (nodes.size() < static_cast<std::size_t>(d)) fail(where + ".nodes", "need at least d nodes");
  for (double t : nodes) {
    Vector v(plan.d);
    double p = 1.0;
    for (Eigen::Index i = 0; i < plan.d; ++i) {
      v(i) = p;
      p *= t;
    }
    plan.frame.vectors.push_back(std::move(v));
  }
  plan.frame.nodes = nodes;
  plan.scalars = reals(field(j, "scalars", where), where + ".scalars");
  return plan;
}

json to_json(const IdentificationReport& report) {
  json out = {{"max_gap", report.max_gap},
              {"equal_on_plan", report.equal_on_plan},
              {"equivalent", report.equivalent},
              {"warning", nullptr}};
  if (report.warning) out["warning"] = *report.warning;
  return out;
}

json to_json(const ExpSumExpansion& expansion) {
  json terms = json::array();
  for (const auto& t : expansion.terms) terms.push_back({{"alpha", t.alpha}, {"coefficient", t.coefficient}});
  return {{"terms", terms}};
}

numerics::Mat<double> points_from_json(const json& j) {
  const json& pts = j.is_object() ? field(j, "points", "points") : j;
  array(pts, "points");
  if (pts.empty()) fail("points", "no points");
  Eigen::Index d = -1;
  numerics::Mat<double> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vector p = vector(pts[i], "points[" + std::to_string(i) + "]", d);
    if (d < 0) {
      d = p.size();
      if (d < 1) fail("points[0]", "empty point");
      out.resize(static_cast<Eigen::Index>(pts.size()), d);
    }
    out.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return out;
}

}  // namespace shallowid::io
