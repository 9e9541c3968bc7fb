#pragma once

#include <string>

#include <json.hpp>

#include "fognet/optimizer.hpp"
#include "fognet/simulator.hpp"

namespace fognet {

/// Parses an experiment config. Every section and key is optional, unknown
/// keys are rejected, and relative paths are resolved against `base_dir`
/// (left as-is when it is empty). Referenced files must exist.
/// Throws ParseError naming the offending key.
SimConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
SimConfig load_config(const std::string& path);

/// Full config with every default written out.
nlohmann::json config_to_json(const SimConfig& cfg);

/// Movement problems in JSON: arrays are time-major ([t][i] and [t][i][j]);
/// null stands for an unlimited capacity.
MovementProblem problem_from_json(const nlohmann::json& j);
nlohmann::json problem_to_json(const MovementProblem& prob);
MovementProblem load_problem(const std::string& path);

nlohmann::json plan_to_json(const MovementPlan& plan);
MovementPlan plan_from_json(const nlohmann::json& j);
nlohmann::json ledger_to_json(const CostLedger& ledger);

std::string mode_name(PlanMode mode);
PlanMode parse_mode(const std::string& name);

}  // namespace fognet
