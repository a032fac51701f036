#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "confplan/acp_online.hpp"
#include "confplan/cp_core.hpp"
#include "confplan/env_sim.hpp"

namespace confplan {

struct GoalRegion {
  Vec2 center;
  double radius = 1.0;

  bool contains(Vec2 p) const { return distance(p, center) <= radius; }
};

struct RrtConfig {
  double v_max = 1.0;
  double step_size = 1.0;
  GoalRegion goal;
  double horizon_H = 50.0;
  double c_start = 0.95;
  double c_end = 0.6;
  int max_iterations = 3000;
  double goal_bias = 0.05;
  std::uint64_t rng_seed = 0;
  // Discrete levels the schedule snaps onto (any order); empty disables snapping.
  std::vector<double> ladder;
  // Check only the new node instead of every sample along the edge.
  bool node_only_check = false;
  // When > 0, children of the root must also stay safe while dwelling at the
  // node until this time (the receding loop commits one cycle per step).
  double commit_duration = 0.0;
  double robot_radius = 0.0;

  void validate() const;
};

struct TreeNode {
  Vec2 position;
  double t = 0.0;
  double confidence = 1.0;
  std::ptrdiff_t parent = -1;
};

/// Linear decay c_end + (c_start - c_end)(1 - t/H), clamped to [0, H].
double schedule_value(double t, const RrtConfig& cfg);

/// schedule_value snapped to the highest ladder level not exceeding it.
double confidence_schedule(double t, const RrtConfig& cfg);

/// Inflated obstacle radius at (relative time, required confidence).
using RadiusFn = std::function<double(double t, double confidence)>;

/// Radius lambda * Q^c(ceil(t / dt)) from a quantile table.
RadiusFn acp_radius_fn(const AcpState& acp, const QuantileTable& base, double dt);

/// Samples the segment every step_size/4 (and every step_size/(4 v_max) in
/// time) and checks that every sample is inside the free workspace with
/// clearance > radius(t, c(t)) against the interpolated predictions.
bool edge_safe(Vec2 x_from, double t_from, Vec2 x_to, double t_to, const Forecast& predictions,
               const RadiusFn& radius, const RrtConfig& cfg, const Workspace& ws);

/// Clearance-vs-radius check of a single point in time.
bool point_safe(Vec2 x, double t, const Forecast& predictions, const RadiusFn& radius,
                const RrtConfig& cfg, const Workspace& ws);

struct TreeResult {
  bool success = false;
  std::vector<TreeNode> path;  // root first
  std::vector<TreeNode> tree;
  std::string failure_reason;
  int iterations = 0;
};

/// Time-aware conformal RRT: sample, nearest (Euclidean), steer (clamped to
/// step_size), t_new = t_near + |dx| / v_max, c_new = schedule(t_new), accept
/// iff the edge is safe at the inflated radius. Node times are relative to
/// the forecast's step 0.
TreeResult grow_tree(const TreeNode& start, const RrtConfig& cfg, const Workspace& ws,
                     const Forecast& predictions, const RadiusFn& radius, bool check_start = true);

TreeResult grow_tree(const TreeNode& start, const RrtConfig& cfg, const Workspace& ws,
                     const Forecast& predictions, const AcpState& acp,
                     const QuantileTable& base_quantiles);

/// Arithmetic mean of the node confidences along a path.
double average_path_confidence(const std::vector<TreeNode>& path);

enum class RrtMode { acp, baseline };

std::string to_string(RrtMode m);

struct RecedingConfig {
  RrtMode mode = RrtMode::acp;
  Vec2 start;
  RrtConfig rrt;
  GateConfig gate;
  // 0 = test once when the warm-up is reached; otherwise re-test every n new scores.
  int gate_retest_every = 0;
  AcpState acp;
  Predictor predictor;
  int history_steps = 2;  // samples of the track before t = 0
  // Compare R_t against lambda * d_min(robot) instead of lambda * base radius.
  bool robot_distance_reference = false;
  int baseline_retries = 3;
  int collision_substeps = 4;
  std::uint64_t seed = 0;
};

struct RunStep {
  double t = 0.0;
  Vec2 position;
  double lambda = 1.0;
  int e = -1;  // -1 before the first feedback
  double score = 0.0;
  double c_next = 0.0;
  double min_obstacle_dist = 0.0;
  bool collided = false;
  bool stalled = false;
  bool acp_active = false;
  double avg_path_confidence = 0.0;
  std::vector<double> path_confidences;  // committed path nodes after the root
  std::vector<Vec2> path_positions;
  std::vector<Vec2> predicted_obstacles;  // forecast centers one step ahead
  double region_radius = 0.0;             // inflated radius one step ahead at c_start
};

struct RunLog {
  RrtMode mode = RrtMode::acp;
  std::vector<RunStep> steps;
  bool reached_goal = false;
  bool collided = false;
  std::vector<double> collision_times;
  std::optional<double> arrival_time;
  GateResult gate;
  AcpState acp;
  int stalls = 0;
};

/// Closed loop: observe, score the previous one-step forecast, update ACP
/// (after the gate rejects), re-predict, re-grow the tree from the current
/// state, execute the first segment for one dt. Stops at the goal, on a
/// ground-truth collision, or when the track is exhausted.
///
/// `track` must be simulate_track(scenario, cfg.history_steps).
RunLog receding_horizon_run(const Scenario& scenario, const std::vector<ObstacleTrajectory>& track,
                            const QuantileTable& table, const CalibrationSet& cal,
                            const RecedingConfig& cfg);

/// Average committed-path confidence at each replanning cycle (stalls skipped).
std::vector<double> average_confidence_series(const RunLog& log);

/// JSON lines `{t, x, y, lambda, e_t, c_next, min_obstacle_dist, collided, ...}`.
void write_run_log_jsonl(std::ostream& out, const RunLog& log);

}  // namespace confplan
