#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "confplan/cp_core.hpp"
#include "confplan/env_sim.hpp"

namespace confplan {

enum class Connectivity { four, eight };

std::string to_string(Connectivity c);
Connectivity connectivity_from_string(const std::string& name);

struct PlanQuery {
  Cell start;
  Cell goal;
  double gamma = 0.0;
  double c_min = 0.0;
  int T_steps = 0;  // number of step samples; plans arrive at some t < T_steps
  Connectivity connectivity = Connectivity::four;
  bool allow_wait = true;

  void validate(const Workspace& ws) const;
};

struct Waypoint {
  Cell cell;
  int t = 0;
  double confidence = 1.0;
};

struct Trajectory {
  std::vector<Waypoint> waypoints;
  int total_time = 0;
  double min_confidence = 1.0;
  double cost = 0.0;
};

struct PlanResult {
  std::optional<Trajectory> trajectory;
  std::string infeasible_reason;
  std::size_t expansions = 0;

  bool feasible() const { return trajectory.has_value(); }
};

/// Grid moves for a connectivity (excluding waits), in a fixed order.
std::span<const Cell> move_offsets(Connectivity c);

/// Admissible time-to-go: Manhattan (4-connected) or Chebyshev (8-connected).
int steps_to_go(Cell a, Cell b, Connectivity c);

/// Travel cost w(v, v'): 1 for cardinal moves and waits, sqrt(2) for diagonals.
double travel_cost(Cell a, Cell b);

/// b is a free cell and, for diagonal moves, neither corner cell is blocked.
bool move_allowed(const Workspace& ws, Cell a, Cell b);

/// Per-(cell, step) safety levels over a confidence ladder. level(cell, t)
/// is the index of the highest ladder level at which the cell is safe
/// (0 = highest confidence), or ladder.size() when unsafe at every level.
///
/// Two sources:
///  - a QuantileTable: safe at level c iff clearance > Q^c(t) (strict);
///  - a CalibrationSet: the empirical c(s,t) snapped down onto the ladder.
/// Clearance is the distance to the nearest predicted obstacle minus the
/// obstacle and robot radii.
class ConfidenceField {
 public:
  static ConfidenceField from_table(const Workspace& ws, const QuantileTable& table,
                                    const ConfidenceLadder& ladder, const Forecast& forecast,
                                    double robot_radius = 0.0, bool check_diagonal_midpoint = true);
  static ConfidenceField from_calibration(const Workspace& ws, const CalibrationSet& cal,
                                          const ConfidenceLadder& ladder,
                                          const Forecast& forecast, double robot_radius = 0.0,
                                          bool check_diagonal_midpoint = true);

  const Workspace& workspace() const { return ws_; }
  const ConfidenceLadder& ladder() const { return ladder_; }
  int steps() const { return steps_; }
  std::size_t unsafe_level() const { return ladder_.size(); }

  std::size_t level(Cell c, int t) const {
    return levels_[static_cast<std::size_t>(t) * cells_ + static_cast<std::size_t>(ws_.index(c))];
  }
  // Empirical c(s,t) for calibration fields; the safe ladder level (or 0) for table fields.
  double confidence(Cell c, int t) const {
    return raw_[static_cast<std::size_t>(t) * cells_ + static_cast<std::size_t>(ws_.index(c))];
  }
  double level_confidence(std::size_t level) const {
    return level < ladder_.size() ? ladder_[level] : 0.0;
  }
  // Highest level index at which the move a@t -> b@t+1 is safe: the arrival
  // cell and, for diagonal moves, the segment midpoint at t + 1/2.
  std::size_t transition_level(Cell a, Cell b, int t) const;
  // Highest admissible (least confident) ladder index for a given c_min.
  std::size_t max_admissible_level(double c_min) const;

 private:
  std::size_t midpoint_level(Cell a, Cell b, int t) const;
  std::size_t level_for_clearance(double clearance, int t, bool half_step) const;

  Workspace ws_;
  ConfidenceLadder ladder_;
  int steps_ = 0;
  std::size_t cells_ = 0;
  bool check_midpoint_ = true;
  double robot_radius_ = 0.0;
  Forecast forecast_;
  std::variant<QuantileTable, CalibrationSet> source_;
  std::vector<std::size_t> levels_;
  std::vector<double> raw_;
};

/// Build the per-(cell, t) field over the forecast's steps.
ConfidenceField build_confidence_field(const QuantileTable& table, const ConfidenceLadder& ladder,
                                       const Forecast& predictions, const Workspace& ws,
                                       double robot_radius = 0.0);
ConfidenceField build_confidence_field(const CalibrationSet& cal, const ConfidenceLadder& ladder,
                                       const Forecast& predictions, const Workspace& ws,
                                       double robot_radius = 0.0);

/// CSV `t,x,y,confidence` with x, y the cell center in meters.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Workspace& ws);

}  // namespace confplan
