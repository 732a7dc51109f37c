#include "shallowid/net.hpp"

#include <algorithm>
#include <sstream>

namespace shallowid {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::parse: return "parse";
    case ErrorKind::admissibility: return "admissibility";
    case ErrorKind::hypothesis: return "hypothesis";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::construction: return "construction";
    case ErrorKind::recovery: return "recovery";
    case ErrorKind::invariant: return "invariant";
    case ErrorKind::size: return "size";
    case ErrorKind::tolerance: return "tolerance";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

void ToleranceConfig::validate() const {
  if (!(rank_tol > 0) || !(match_tol > 0) || !(residual_tol > 0) || !(zero_tol > 0)) {
    throw Error(ErrorKind::input, "tolerances must be strictly positive");
  }
  if (rank_tol > match_tol) throw Error(ErrorKind::input, "rank_tol must not exceed match_tol");
}

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
  }
  return "relu";
}

ActivationKind activation_from_string(std::string_view name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "tanh") return ActivationKind::tanh;
  throw Error(ErrorKind::parse, "unknown activation \"" + std::string(name) + "\"");
}

bool same_hyperplane(const Hyperplane& h1, const Hyperplane& h2, const ToleranceConfig& tol) {
  if (h1.a.size() != h2.a.size()) return false;
  if ((h1.a - h2.a).cwiseAbs().maxCoeff() > tol.match_tol) return false;
  return std::abs(h1.b - h2.b) <= tol.match_tol * (1.0 + std::max(std::abs(h1.b), std::abs(h2.b)));
}

double evaluate(const GroupedReLU& g, const Vector& x) {
  if (x.size() != g.d) throw Error(ErrorKind::input, "input dimension does not match grouped network");
  double acc = g.c;
  for (const auto& t : g.k1) {
    const double u = t.h.signed_distance(x);
    acc += t.s1 * relu(u) + t.s2 * relu(-u);
  }
  for (const auto& t : g.k2) acc += t.s * relu(t.a.dot(x) + t.b);
  return acc;
}

ShallowNet to_net(const GroupedReLU& g) {
  ShallowNet net;
  net.activation = Activation{ActivationKind::relu};
  net.d = g.d;
  net.c = g.c;
  for (const auto& t : g.k1) {
    net.neurons.push_back({t.h.a, t.h.b, t.s1});
    net.neurons.push_back({-t.h.a, -t.h.b, t.s2});
  }
  for (const auto& t : g.k2) net.neurons.push_back({t.a, t.b, t.s});
  return net;
}

std::string Violation::describe() const {
  std::ostringstream os;
  switch (clause) {
    case AdmissibilityClause::zero_direction: os << "clause (i): neuron " << first << " has a zero direction"; break;
    case AdmissibilityClause::zero_scale: os << "clause (i): neuron " << first << " has a zero output scale"; break;
    case AdmissibilityClause::positive_duplicate:
      os << "clause (ii): neurons " << first << " and " << second.value_or(first)
         << " share (a, b) up to a positive scale";
      break;
    case AdmissibilityClause::signed_duplicate:
      os << "clause (ii): neurons " << first << " and " << second.value_or(first) << " satisfy (a, b) = +-(a', b')";
      break;
  }
  return os.str();
}

std::string AdmissibilityReport::describe() const {
  if (violations.empty()) return "admissible";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.describe();
  }
  return out;
}

namespace {

struct UnitNeuron {
  Vector a;
  double b;
  double s;
};

UnitNeuron unit_form(const Neuron& n) {
  const double norm = n.a.norm();
  return {n.a / norm, n.b / norm, n.s * norm};
}

}  // namespace

AdmissibilityReport relu_admissibility(const ShallowNet& net, const ToleranceConfig& tol) {
  if (net.activation.kind != ActivationKind::relu) {
    throw Error(ErrorKind::input, "ReLU admissibility requested for a non-ReLU network");
  }
  net.validate();
  AdmissibilityReport report;
  std::vector<bool> nonzero(net.m(), false);
  for (std::size_t k = 0; k < net.m(); ++k) {
    const auto& n = net.neurons[k];
    const double norm = n.a.norm();
    if (!(norm > tol.zero_tol)) {
      report.violations.push_back({AdmissibilityClause::zero_direction, k, std::nullopt});
    } else if (!(std::abs(n.s) * norm > tol.zero_tol)) {
      report.violations.push_back({AdmissibilityClause::zero_scale, k, std::nullopt});
    } else {
      nonzero[k] = true;
    }
  }
  for (std::size_t i = 0; i < net.m(); ++i) {
    if (!nonzero[i]) continue;
    const UnitNeuron ui = unit_form(net.neurons[i]);
    for (std::size_t j = i + 1; j < net.m(); ++j) {
      if (!nonzero[j]) continue;
      const UnitNeuron uj = unit_form(net.neurons[j]);
      const Hyperplane hi{ui.a, ui.b};
      const Hyperplane hj{uj.a, uj.b};
      if (same_hyperplane(hi, hj, tol)) {
        report.violations.push_back({AdmissibilityClause::positive_duplicate, i, j});
      }
    }
  }
  return report;
}

GroupedReLU group(const ShallowNet& net, const ToleranceConfig& tol) {
  const AdmissibilityReport report = relu_admissibility(net, tol);
  if (!report.admissible()) throw Error(ErrorKind::admissibility, report.describe());

  struct Slot {
    Hyperplane h;
    std::optional<std::size_t> plus;
    std::optional<std::size_t> minus;
  };
  std::vector<UnitNeuron> unit;
  std::vector<Slot> slots;
  unit.reserve(net.m());
  for (std::size_t k = 0; k < net.m(); ++k) {
    unit.push_back(unit_form(net.neurons[k]));
    const UnitNeuron& u = unit.back();
    const Hyperplane h = canonical_hyperplane(u.a, u.b, tol);
    const bool positive = u.a.dot(h.a) > 0;
    auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return same_hyperplane(s.h, h, tol); });
    if (it == slots.end()) {
      slots.push_back({h, std::nullopt, std::nullopt});
      it = std::prev(slots.end());
    }
    auto& slot = positive ? it->plus : it->minus;
    if (slot) {
      throw Error(ErrorKind::admissibility, Violation{AdmissibilityClause::positive_duplicate, *slot, k}.describe());
    }
    slot = k;
  }

  GroupedReLU g;
  g.d = net.d;
  g.c = net.c;
  for (const auto& slot : slots) {
    if (slot.plus && slot.minus) {
      g.k1.push_back({slot.h, unit[*slot.plus].s, unit[*slot.minus].s});
    } else {
      const UnitNeuron& u = unit[slot.plus ? *slot.plus : *slot.minus];
      g.k2.push_back({u.a, u.b, u.s});
    }
  }
  return g;
}

ShallowNet tanh_as_sigmoid(const ShallowNet& net) {
  if (net.activation.kind != ActivationKind::tanh) {
    throw Error(ErrorKind::input, "tanh_as_sigmoid expects a tanh network");
  }
  ShallowNet out;
  out.activation = Activation{ActivationKind::sigmoid};
  out.d = net.d;
  out.c = net.c;
  for (const auto& n : net.neurons) {
    out.neurons.push_back({2.0 * n.a, 2.0 * n.b, 2.0 * n.s});
    out.c -= n.s;
  }
  return out;
}

}  // namespace shallowid
