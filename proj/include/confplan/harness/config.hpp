#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "confplan/env_sim.hpp"
#include "confplan/grid_planning.hpp"
#include "confplan/planner_rrt.hpp"

namespace confplan::harness {

using Json = nlohmann::ordered_json;

/// Schema violation; `path` names the offending field (e.g. "rrt.goal.radius").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class PlannerKind { spacetime, cp_sipp, acp_rrt, rrt_baseline };

std::string to_string(PlannerKind k);
PlannerKind planner_kind_from_string(const std::string& name);
bool is_grid_planner(PlannerKind k);

struct PredictorConfig {
  Predictor predictor;
  int history_steps = 2;
};

struct GridConfig {
  Cell start;
  Cell goal;
  std::vector<double> ladder{0.95};
  double c_min = 0.95;
  double gamma = 0.0;
  Connectivity connectivity = Connectivity::four;
  bool allow_wait = true;
  int T_steps = 0;  // 0 = every step of the scenario horizon
  double robot_radius = 0.0;
};

struct ExperimentSpec {
  std::filesystem::path spec_dir;  // relative paths resolve against this
  std::string scenario_path;
  Scenario scenario;
  PlannerKind planner = PlannerKind::cp_sipp;
  int calibration_episodes = 200;
  int test_trials = 100;
  std::uint64_t seed = 0;
  std::string output_dir;
  PredictorConfig predictor;
  // Forecaster used during evaluation; defaults to the calibration predictor.
  std::optional<Predictor> live_predictor;
  GridConfig grid;
  RecedingConfig receding;
  std::vector<double> frame_times;  // snapshot times for trajectory_frames
};

Scenario scenario_from_json(const Json& j, const std::string& path = "scenario");
Json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& file);

/// Parses an experiment file; the scenario is loaded from `scenario`
/// (a path relative to the spec file) or taken inline from `scenario_inline`.
ExperimentSpec experiment_from_json(const Json& j, const std::filesystem::path& spec_dir);
ExperimentSpec load_experiment(const std::filesystem::path& file);

/// Every resolved field, defaults included.
Json experiment_to_json(const ExperimentSpec& spec);

/// Sets a dotted field path (e.g. "grid.c_min") on a JSON document, creating
/// intermediate objects. Used by `sweep`.
void set_json_path(Json& j, const std::string& dotted, const Json& value);

/// Reads and parses a JSON file; parse failures become ConfigError at `path`.
Json read_json_file(const std::filesystem::path& file, const std::string& path);

}  // namespace confplan::harness
