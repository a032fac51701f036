#include "confplan/planner_spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

namespace confplan {

std::optional<double> edge_weight(double w_travel, double c_next, double gamma) {
  if (!(c_next > 0.0)) return std::nullopt;
  return (1.0 - gamma) * w_travel - gamma * std::log(c_next);
}

namespace {

constexpr double kTieEps = 1e-9;

struct OpenEntry {
  double f;
  std::size_t level;
  int vertex;
  int t;
  double g;
};

struct WorseFirst {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    if (std::abs(a.f - b.f) > kTieEps) return a.f > b.f;
    if (a.level != b.level) return a.level > b.level;
    if (a.vertex != b.vertex) return a.vertex > b.vertex;
    return a.t > b.t;
  }
};

double cost_to_go(Cell a, Cell b, Connectivity c) {
  int dx = std::abs(a.x - b.x);
  int dy = std::abs(a.y - b.y);
  if (c == Connectivity::four) return dx + dy;
  return (dx + dy) + (std::numbers::sqrt2 - 2.0) * std::min(dx, dy);
}

}  // namespace

PlanResult plan_spacetime(const PlanQuery& query, const ConfidenceField& field) {
  const Workspace& ws = field.workspace();
  query.validate(ws);
  PlanResult result;
  const int horizon = std::min(query.T_steps, field.steps());
  if (horizon < query.T_steps) {
    throw std::invalid_argument("confidence field covers fewer steps than the query horizon");
  }
  const std::size_t max_level = field.max_admissible_level(query.c_min);
  if (max_level >= field.ladder().size()) {
    result.infeasible_reason = "no ladder level satisfies c_min";
    return result;
  }
  if (field.level(query.start, 0) > max_level) {
    result.infeasible_reason = "start is below c_min at t=0";
    return result;
  }
  bool goal_ever_safe = false;
  for (int t = 0; t < horizon && !goal_ever_safe; ++t) {
    goal_ever_safe = field.level(query.goal, t) <= max_level;
  }
  if (!goal_ever_safe) {
    result.infeasible_reason = "goal is below c_min at every step of the horizon";
    return result;
  }

  const auto cells = static_cast<std::size_t>(ws.cell_count());
  const std::size_t n_states = cells * static_cast<std::size_t>(horizon);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n_states, kInf);
  std::vector<std::int64_t> parent(n_states, -1);
  std::vector<std::size_t> arrival_level(n_states, field.ladder().size());
  std::vector<char> closed(n_states, 0);
  auto key = [&](int vertex, int t) {
    return static_cast<std::size_t>(t) * cells + static_cast<std::size_t>(vertex);
  };
  const double h_scale = 1.0 - query.gamma;

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, WorseFirst> open;
  const int start_v = ws.index(query.start);
  const std::size_t start_level = field.level(query.start, 0);
  g[key(start_v, 0)] = 0.0;
  arrival_level[key(start_v, 0)] = start_level;
  open.push({h_scale * cost_to_go(query.start, query.goal, query.connectivity), start_level, start_v,
             0, 0.0});

  std::int64_t goal_state = -1;
  while (!open.empty()) {
    OpenEntry cur = open.top();
    open.pop();
    const std::size_t k = key(cur.vertex, cur.t);
    if (closed[k] || cur.g > g[k]) continue;
    closed[k] = 1;
    ++result.expansions;
    const Cell here = ws.cell(cur.vertex);
    if (here == query.goal) {
      goal_state = static_cast<std::int64_t>(k);
      break;
    }
    if (cur.t + 1 >= horizon) continue;

    auto relax = [&](Cell next) {
      std::size_t lv = field.transition_level(here, next, cur.t);
      if (lv > max_level) return;
      auto w = edge_weight(travel_cost(here, next), field.level_confidence(lv), query.gamma);
      if (!w) return;
      const int nv = ws.index(next);
      const std::size_t nk = key(nv, cur.t + 1);
      if (closed[nk]) return;
      double ng = cur.g + *w;
      if (ng < g[nk] - kTieEps ||
          (std::abs(ng - g[nk]) <= kTieEps && lv < arrival_level[nk])) {
        g[nk] = ng;
        parent[nk] = static_cast<std::int64_t>(k);
        arrival_level[nk] = lv;
        open.push({ng + h_scale * cost_to_go(next, query.goal, query.connectivity), lv, nv,
                   cur.t + 1, ng});
      }
    };

    for (Cell d : move_offsets(query.connectivity)) {
      Cell next{here.x + d.x, here.y + d.y};
      if (!move_allowed(ws, here, next)) continue;
      relax(next);
    }
    if (query.allow_wait) relax(here);
  }

  if (goal_state < 0) {
    result.infeasible_reason = "no safe path reaches the goal within the horizon";
    return result;
  }

  Trajectory traj;
  for (std::int64_t s = goal_state; s >= 0; s = parent[static_cast<std::size_t>(s)]) {
    const auto us = static_cast<std::size_t>(s);
    Waypoint w;
    w.cell = ws.cell(static_cast<int>(us % cells));
    w.t = static_cast<int>(us / cells);
    w.confidence = field.level_confidence(arrival_level[us]);
    traj.waypoints.push_back(w);
  }
  std::reverse(traj.waypoints.begin(), traj.waypoints.end());
  traj.total_time = traj.waypoints.back().t;
  traj.cost = g[static_cast<std::size_t>(goal_state)];
  traj.min_confidence = 1.0;
  for (const auto& w : traj.waypoints) traj.min_confidence = std::min(traj.min_confidence, w.confidence);
  result.trajectory = std::move(traj);
  return result;
}

}  // namespace confplan
