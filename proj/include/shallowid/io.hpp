#pragma once

#include <string>

#include <json.hpp>

#include "shallowid/analytic_id.hpp"
#include "shallowid/net.hpp"
#include "shallowid/relu_adversary.hpp"
#include "shallowid/relu_sampling.hpp"
#include "shallowid/relu_structure.hpp"

namespace shallowid::io {

using json = nlohmann::json;

/// Parses a file; throws Error(parse) naming the file on failure.
json read_json(const std::string& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// Two-space indented dump with a trailing newline.
std::string dump(const json& j);

json to_json(const ShallowNet& net);
ShallowNet net_from_json(const json& j, const std::string& where = "net");

json to_json(const EquivalenceCertificate& cert);
json to_json(const ReductionWitness& w);

json to_json(const SamplePlan& plan);
SamplePlan plan_from_json(const json& j, const std::string& where = "plan");

/// plan_ref is either an inline plan object or a path to a plan file.
json to_json(const LabeledSamples& data);
LabeledSamples samples_from_json(const json& j, const ToleranceConfig& tol);

json to_json(const AdversarialPair& pair);

json to_json(const AnalyticSamplePlan& plan);
AnalyticSamplePlan analytic_plan_from_json(const json& j);

json to_json(const IdentificationReport& report);
json to_json(const ExpSumExpansion& expansion);

/// {"points": [[...], ...]} or a bare array of points.
numerics::Mat<double> points_from_json(const json& j);

}  // namespace shallowid::io
