#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "confplan/grid_planning.hpp"

namespace confplan {

/// Half-open step range [t_start, t_end).
struct SafeInterval {
  int t_start = 0;
  int t_end = 0;

  bool contains(int t) const { return t >= t_start && t < t_end; }
  bool operator==(const SafeInterval&) const = default;
};

/// Maximal runs of true entries in `safe`.
std::vector<SafeInterval> intervals_from_mask(const std::vector<bool>& safe);

/// Maximal runs of steps t in [0, T_steps) where
/// min_i (|center(vertex) - predicted_i(t)| - r_i) - robot_radius > Q^c(t).
std::vector<SafeInterval> compute_safe_intervals(const Workspace& ws, Cell vertex,
                                                 double confidence, const QuantileTable& table,
                                                 const Forecast& predictions, int T_steps,
                                                 double robot_radius = 0.0);

/// Safe intervals for every (vertex, ladder level) of a confidence field.
/// Level l lists the steps where the vertex is safe at ladder[l] or better,
/// so intervals nest: a lower level's union contains every higher level's.
class IntervalTimeline {
 public:
  explicit IntervalTimeline(const ConfidenceField& field);
  // Explicit table indexed [cell_index * levels + level].
  IntervalTimeline(Workspace ws, std::size_t levels, std::vector<std::vector<SafeInterval>> table);

  const std::vector<SafeInterval>& intervals(Cell c, std::size_t level) const {
    return table_[static_cast<std::size_t>(ws_.index(c)) * levels_ + level];
  }
  std::size_t levels() const { return levels_; }
  std::size_t total_intervals() const;

 private:
  Workspace ws_;
  std::size_t levels_ = 0;
  std::vector<std::vector<SafeInterval>> table_;
};

struct SippState {
  Cell vertex;
  std::size_t level = 0;     // ladder index
  std::size_t interval = 0;  // index into timeline.intervals(vertex, level)
  int g = 0;                 // earliest arrival step
  std::ptrdiff_t parent = -1;
};

/// Successors of `state`: for each allowed neighbor v', each admissible level
/// and each safe interval of (v', level), the earliest arrival g' = tau + 1 with
/// departure tau in [max(g, start' - 1), t_end - 1] and tau + 1 inside the
/// interval; diagonal moves also require a safe midpoint at that level.
std::vector<SippState> sipp_successors(const SippState& state, const IntervalTimeline& timeline,
                                       const ConfidenceField& field, const PlanQuery& query);

/// A* over (vertex, confidence, interval) states minimizing arrival time;
/// ties on f go to the higher confidence, then the lower vertex index.
/// The returned trajectory lists every occupied step including waits.
PlanResult plan_sipp(const PlanQuery& query, const IntervalTimeline& timeline,
                     const ConfidenceField& field);

/// Union bound on the trajectory violation probability: sum over occupied steps of (1 - c_t).
double trajectory_risk_bound(const Trajectory& traj);

/// CSV `x,y,confidence,t_start,t_end` (cell indices).
void write_intervals_csv(std::ostream& out, const IntervalTimeline& timeline,
                         const ConfidenceField& field);

}  // namespace confplan
