#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confplan/harness/config.hpp"
#include "confplan/metrics.hpp"
#include "confplan/planner_sipp.hpp"

namespace confplan::harness {

/// Everything a trial needs that does not depend on the trial index.
struct Calibrated {
  std::vector<ObstacleTrajectory> track;  // includes the pre-t=0 history
  std::vector<ObstacleTrajectory> truth;  // [0, horizon] only
  CalibrationSet cal;
  ConfidenceLadder ladder;
  QuantileTable table;
  int steps = 0;       // columns of the calibration set
  int max_anchor = 0;  // RRT calibration draws forecast anchors up to here
};

/// Simulates the scenario and calibrates the predictor. Grid experiments use
/// grid.T_steps columns anchored at t = 0; RRT experiments use ceil(H/dt)+1
/// columns anchored anywhere inside the scenario horizon.
Calibrated calibrate_experiment(const ExperimentSpec& spec, int jobs);

struct GridTrial {
  TrialResult result;
  std::optional<Trajectory> trajectory;
  std::string infeasible_reason;
  std::vector<double> scores;  // R(t) of this trial's forecast against the truth
  Forecast prediction;
  Forecast truth;
  // Some occupied step had R(t) > Q^{c_t}(t): the event the union bound covers.
  bool violated = false;
  std::size_t path_steps = 0;

  bool feasible() const { return trajectory.has_value(); }
};

/// Forecast with the live predictor, plan on the conformal field, replay
/// against the ground truth. Seeded by mix_seed(spec.seed, trial).
GridTrial run_grid_trial(const ExperimentSpec& spec, const Calibrated& ctx, int trial,
                         bool keep_forecasts = false);

struct RrtTrial {
  TrialResult result;
  RunLog log;
  bool first_node_dominates = true;
};

/// One receding-horizon mission. ACP and baseline runs of the same trial
/// share predictor and tree seeds.
RrtTrial run_rrt_trial(const ExperimentSpec& spec, const Calibrated& ctx, int trial, RrtMode mode);

struct RunOptions {
  int jobs = 1;
  std::filesystem::path output_dir;  // overrides spec.output_dir when set
};

struct ExperimentResult {
  AggregateReport report;
  Json summary;  // contents of report.json
  int infeasible_trials = 0;
  std::map<std::string, int> infeasible_reasons;
  bool first_node_dominance = true;
  std::filesystem::path output_dir;
};

/// Full pipeline: calibrate, run every test trial (up to `jobs` at a time),
/// aggregate and write the artifacts. Infeasible plans are counted, not thrown.
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options);

/// Writes only the calibration artifacts (quantile_table.csv, calibration_scores.csv).
Calibrated run_calibration(const ExperimentSpec& spec, const RunOptions& options);

/// Plans trial 0 and writes its trajectory, intervals and frames. Returns
/// false when the planner reports infeasibility.
bool run_single_plan(const ExperimentSpec& spec, const RunOptions& options);

std::filesystem::path resolve_output_dir(const ExperimentSpec& spec, const RunOptions& options);

}  // namespace confplan::harness
