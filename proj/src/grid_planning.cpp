#include "confplan/grid_planning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "confplan/format.hpp"

namespace confplan {

namespace {

constexpr std::array<Cell, 4> kFour{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
constexpr std::array<Cell, 8> kEight{
    {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}}};

}  // namespace

std::string to_string(Connectivity c) { return c == Connectivity::four ? "4-connected" : "8-connected"; }

Connectivity connectivity_from_string(const std::string& name) {
  if (name == "4-connected" || name == "four" || name == "4") return Connectivity::four;
  if (name == "8-connected" || name == "eight" || name == "8") return Connectivity::eight;
  throw std::invalid_argument("unknown motion model '" + name + "'");
}

void PlanQuery::validate(const Workspace& ws) const {
  if (!ws.in_bounds(start)) throw std::invalid_argument("start cell outside the workspace");
  if (!ws.in_bounds(goal)) throw std::invalid_argument("goal cell outside the workspace");
  if (ws.is_blocked(start)) throw std::invalid_argument("start cell is statically blocked");
  if (ws.is_blocked(goal)) throw std::invalid_argument("goal cell is statically blocked");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(c_min >= 0.0 && c_min <= 1.0)) throw std::invalid_argument("c_min must lie in [0, 1]");
  if (T_steps < 1) throw std::invalid_argument("T_steps must be >= 1");
}

std::span<const Cell> move_offsets(Connectivity c) {
  if (c == Connectivity::four) return kFour;
  return kEight;
}

int steps_to_go(Cell a, Cell b, Connectivity c) {
  int dx = std::abs(a.x - b.x);
  int dy = std::abs(a.y - b.y);
  return c == Connectivity::four ? dx + dy : std::max(dx, dy);
}

double travel_cost(Cell a, Cell b) {
  return (a.x != b.x && a.y != b.y) ? std::numbers::sqrt2 : 1.0;
}

bool move_allowed(const Workspace& ws, Cell a, Cell b) {
  if (!ws.is_free(b)) return false;
  if (a.x == b.x || a.y == b.y) return true;
  return !ws.is_blocked({b.x, a.y}) && !ws.is_blocked({a.x, b.y});
}

ConfidenceField ConfidenceField::from_table(const Workspace& ws, const QuantileTable& table,
                                            const ConfidenceLadder& ladder,
                                            const Forecast& forecast, double robot_radius,
                                            bool check_diagonal_midpoint) {
  ladder.validate();
  if (table.horizon_steps() < static_cast<std::size_t>(forecast.steps())) {
    throw std::invalid_argument("quantile table covers " + std::to_string(table.horizon_steps()) +
                                " steps but the forecast has " +
                                std::to_string(forecast.steps()));
  }
  // Resolve ladder levels to table rows once; the field keeps its own copy.
  std::vector<double> thresholds;
  for (double c : ladder.levels) {
    std::size_t li = table.level_index(c);
    for (std::size_t t = 0; t < table.horizon_steps(); ++t) thresholds.push_back(table.threshold(li, t));
  }
  ConfidenceField f;
  f.source_ = QuantileTable(ladder.levels, table.horizon_steps(), std::move(thresholds));
  f.ws_ = ws;
  f.ladder_ = ladder;
  f.steps_ = forecast.steps();
  f.cells_ = static_cast<std::size_t>(ws.cell_count());
  f.check_midpoint_ = check_diagonal_midpoint;
  f.robot_radius_ = robot_radius;
  f.forecast_ = forecast;
  f.levels_.assign(f.cells_ * static_cast<std::size_t>(f.steps_), ladder.size());
  f.raw_.assign(f.levels_.size(), 0.0);
  for (int t = 0; t < f.steps_; ++t) {
    const auto& centers = forecast.at[static_cast<std::size_t>(t)];
    for (int idx = 0; idx < ws.cell_count(); ++idx) {
      Cell c = ws.cell(idx);
      if (ws.is_blocked(c)) continue;
      double d = min_clearance(ws.center(c), centers, forecast.radii, robot_radius);
      std::size_t lv = f.level_for_clearance(d, t, false);
      std::size_t k = static_cast<std::size_t>(t) * f.cells_ + static_cast<std::size_t>(idx);
      f.levels_[k] = lv;
      f.raw_[k] = f.level_confidence(lv);
    }
  }
  return f;
}

ConfidenceField ConfidenceField::from_calibration(const Workspace& ws, const CalibrationSet& cal,
                                                  const ConfidenceLadder& ladder,
                                                  const Forecast& forecast, double robot_radius,
                                                  bool check_diagonal_midpoint) {
  ladder.validate();
  if (cal.horizon_steps() < static_cast<std::size_t>(forecast.steps())) {
    throw std::invalid_argument("calibration set covers " + std::to_string(cal.horizon_steps()) +
                                " steps but the forecast has " +
                                std::to_string(forecast.steps()));
  }
  ConfidenceField f;
  f.source_ = cal;
  f.ws_ = ws;
  f.ladder_ = ladder;
  f.steps_ = forecast.steps();
  f.cells_ = static_cast<std::size_t>(ws.cell_count());
  f.check_midpoint_ = check_diagonal_midpoint;
  f.robot_radius_ = robot_radius;
  f.forecast_ = forecast;
  f.levels_.assign(f.cells_ * static_cast<std::size_t>(f.steps_), ladder.size());
  f.raw_.assign(f.levels_.size(), 0.0);
  for (int t = 0; t < f.steps_; ++t) {
    const auto& centers = forecast.at[static_cast<std::size_t>(t)];
    for (int idx = 0; idx < ws.cell_count(); ++idx) {
      Cell c = ws.cell(idx);
      if (ws.is_blocked(c)) continue;
      double d = min_clearance(ws.center(c), centers, forecast.radii, robot_radius);
      std::size_t k = static_cast<std::size_t>(t) * f.cells_ + static_cast<std::size_t>(idx);
      f.raw_[k] = confidence_from_distance(cal, static_cast<std::size_t>(t), d);
      f.levels_[k] = ladder.highest_not_exceeding(f.raw_[k]);
    }
  }
  return f;
}

std::size_t ConfidenceField::level_for_clearance(double clearance, int t, bool half_step) const {
  const auto tt = static_cast<std::size_t>(t);
  if (const auto* table = std::get_if<QuantileTable>(&source_)) {
    for (std::size_t i = 0; i < ladder_.size(); ++i) {
      double q = table->threshold(i, tt);
      if (half_step) q = std::max(q, table->threshold(i, tt + 1));
      if (clearance > q) return i;
    }
    return ladder_.size();
  }
  const auto& cal = std::get<CalibrationSet>(source_);
  double c = confidence_from_distance(cal, tt, clearance);
  if (half_step) c = std::min(c, confidence_from_distance(cal, tt + 1, clearance));
  return ladder_.highest_not_exceeding(c);
}

std::size_t ConfidenceField::midpoint_level(Cell a, Cell b, int t) const {
  Vec2 mid = lerp(ws_.center(a), ws_.center(b), 0.5);
  double time = (t + 0.5) * forecast_.dt;
  std::vector<Vec2> centers;
  centers.reserve(static_cast<std::size_t>(forecast_.obstacles()));
  for (int i = 0; i < forecast_.obstacles(); ++i) centers.push_back(forecast_.position(time, i));
  double d = min_clearance(mid, centers, forecast_.radii, robot_radius_);
  return level_for_clearance(d, t, true);
}

std::size_t ConfidenceField::transition_level(Cell a, Cell b, int t) const {
  std::size_t lv = level(b, t + 1);
  if (check_midpoint_ && a.x != b.x && a.y != b.y && lv < ladder_.size()) {
    lv = std::max(lv, midpoint_level(a, b, t));
  }
  return lv;
}

std::size_t ConfidenceField::max_admissible_level(double c_min) const {
  std::size_t best = ladder_.size();
  for (std::size_t i = 0; i < ladder_.size(); ++i) {
    if (ladder_[i] >= c_min) best = i;
  }
  return best;  // ladder.size() when nothing is admissible
}

ConfidenceField build_confidence_field(const QuantileTable& table, const ConfidenceLadder& ladder,
                                       const Forecast& predictions, const Workspace& ws,
                                       double robot_radius) {
  return ConfidenceField::from_table(ws, table, ladder, predictions, robot_radius);
}

ConfidenceField build_confidence_field(const CalibrationSet& cal, const ConfidenceLadder& ladder,
                                       const Forecast& predictions, const Workspace& ws,
                                       double robot_radius) {
  return ConfidenceField::from_calibration(ws, cal, ladder, predictions, robot_radius);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Workspace& ws) {
  out << "t,x,y,confidence\n";
  for (const Waypoint& w : traj.waypoints) {
    Vec2 p = ws.center(w.cell);
    out << w.t << ',' << fmt_double(p.x) << ',' << fmt_double(p.y) << ','
        << fmt_double(w.confidence) << '\n';
  }
}

}  // namespace confplan
