#pragma once

#include <json.hpp>

#include "concavity/convexity.hpp"
#include "concavity/envelope.hpp"
#include "concavity/solver.hpp"

namespace clab {

using nlohmann::json;

inline json to_json(const Vec2& p) { return json::array({p.x, p.y}); }

inline json to_json(const DefectReport& r) {
  json j;
  j["sup_value"] = r.sup_value;
  j["raw_value"] = r.raw_value;
  j["argmax"] = {{"y1", to_json(r.argmax.y1)}, {"y3", to_json(r.argmax.y3)}, {"lambda", r.argmax.lambda}};
  j["location_class"] = r.location_class;
  j["evaluations"] = r.evaluations;
  j["inadmissible"] = r.inadmissible;
  j["lambda_steps"] = r.lambda_steps;
  j["endpoints_used"] = r.endpoints_used;
  j["z_samples"] = r.z_samples;
  return j;
}

inline DefectReport defect_from_json(const json& j) {
  DefectReport r;
  r.sup_value = j.at("sup_value").get<double>();
  r.raw_value = j.value("raw_value", r.sup_value);
  r.argmax.y1 = {j.at("argmax").at("y1")[0].get<double>(), j.at("argmax").at("y1")[1].get<double>()};
  r.argmax.y3 = {j.at("argmax").at("y3")[0].get<double>(), j.at("argmax").at("y3")[1].get<double>()};
  r.argmax.lambda = j.at("argmax").at("lambda").get<double>();
  r.location_class = j.at("location_class").get<std::string>();
  r.evaluations = j.at("evaluations").get<long long>();
  r.inadmissible = j.value("inadmissible", 0LL);
  r.lambda_steps = j.value("lambda_steps", 0);
  r.endpoints_used = j.value("endpoints_used", 0);
  r.z_samples = j.value("z_samples", 1);
  return r;
}

inline json to_json(const SolveReport& r) {
  json j;
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["damping_history"] = r.damping_history;
  j["converged"] = r.converged;
  j["message"] = r.message;
  return j;
}

inline json envelope_summary(const EnvelopeResult& e) {
  json j;
  j["gap"] = e.gap;
  j["witness_distance"] = e.witness_distance;
  j["argmax_node"] = e.argmax_node;
  j["nodes_used"] = e.nodes_used;
  return j;
}

}  // namespace clab
