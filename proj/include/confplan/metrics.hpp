#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confplan/cp_core.hpp"
#include "confplan/env_sim.hpp"
#include "confplan/grid_planning.hpp"

namespace confplan {

struct TrialResult {
  int trial_id = 0;
  bool reached_goal = false;
  bool collided = false;
  std::vector<double> collision_times;
  std::optional<double> arrival_time;
  double risk_bound = 0.0;
  std::optional<double> mean_miscoverage;

  // Throws std::invalid_argument when the flags disagree with the lists.
  void validate() const;
};

/// Rate with a 3-sigma normal-approximation half-width, clamped to [0, 1].
/// With zero (or n) successes the half-width degenerates, so the bound is
/// replaced by the rule of three (3/n) and `note` says so.
struct RateCi {
  std::size_t successes = 0;
  std::size_t n = 0;
  double rate = 0.0;
  double half_width = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string note;
};

RateCi binomial_ci(std::size_t successes, std::size_t n);

/// Ground-truth replay of a grid trajectory: waypoint k at time t0 + t_k*dt,
/// position = cell center. Every waypoint is checked with point_collides.
/// Throws if the trajectory is empty or leaves the truth's time span.
TrialResult evaluate_trajectory(const Trajectory& traj, const Workspace& ws,
                                std::span<const ObstacleTrajectory> truth, double robot_radius,
                                double dt = 1.0, double t0 = 0.0, int trial_id = 0);

struct CoveragePoint {
  std::size_t t = 0;
  double threshold = 0.0;
  RateCi coverage;
};

/// Per-step fraction of test episodes with R(t) <= Q^c(t). Needs >= 100 episodes.
std::vector<CoveragePoint> coverage_curve(const CalibrationSet& test_episodes,
                                          const QuantileTable& table, double confidence);

struct NamedCurve {
  std::string name;
  std::vector<CoveragePoint> points;
};

struct AggregateReport {
  std::size_t n_trials = 0;
  RateCi collision;
  RateCi goal;
  std::optional<double> mean_arrival_time;
  double mean_risk_bound = 0.0;
  double max_risk_bound = 0.0;
  // Collision rate <= mean risk bound + half-width of the collision CI.
  double union_bound = 0.0;
  bool union_bound_holds = true;
  std::optional<double> mean_miscoverage;
  std::optional<double> miscoverage_band;
  std::vector<NamedCurve> coverage_curves;
};

/// Deterministic and independent of the order of `trials` (sorted by id first).
AggregateReport aggregate(std::vector<TrialResult> trials);

void write_report_json(std::ostream& out, const AggregateReport& report);
void write_report_text(std::ostream& out, const AggregateReport& report);

}  // namespace confplan
