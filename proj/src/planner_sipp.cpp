#include "confplan/planner_sipp.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <tuple>

#include "confplan/format.hpp"

namespace confplan {

std::vector<SafeInterval> intervals_from_mask(const std::vector<bool>& safe) {
  std::vector<SafeInterval> out;
  const int n = static_cast<int>(safe.size());
  int t = 0;
  while (t < n) {
    if (!safe[static_cast<std::size_t>(t)]) {
      ++t;
      continue;
    }
    int begin = t;
    while (t < n && safe[static_cast<std::size_t>(t)]) ++t;
    out.push_back({begin, t});
  }
  return out;
}

std::vector<SafeInterval> compute_safe_intervals(const Workspace& ws, Cell vertex,
                                                 double confidence, const QuantileTable& table,
                                                 const Forecast& predictions, int T_steps,
                                                 double robot_radius) {
  if (T_steps > predictions.steps() || static_cast<std::size_t>(T_steps) > table.horizon_steps()) {
    throw std::invalid_argument("safe-interval horizon exceeds the forecast or quantile table");
  }
  const std::size_t level = table.level_index(confidence);
  std::vector<bool> safe(static_cast<std::size_t>(std::max(T_steps, 0)), false);
  if (ws.is_free(vertex)) {
    const Vec2 p = ws.center(vertex);
    for (int t = 0; t < T_steps; ++t) {
      double d = min_clearance(p, predictions.at[static_cast<std::size_t>(t)], predictions.radii,
                               robot_radius);
      safe[static_cast<std::size_t>(t)] = d > table.threshold(level, static_cast<std::size_t>(t));
    }
  }
  return intervals_from_mask(safe);
}

IntervalTimeline::IntervalTimeline(const ConfidenceField& field)
    : ws_(field.workspace()), levels_(field.ladder().size()) {
  const int cells = ws_.cell_count();
  table_.resize(static_cast<std::size_t>(cells) * levels_);
  std::vector<bool> mask(static_cast<std::size_t>(field.steps()));
  for (int idx = 0; idx < cells; ++idx) {
    Cell c = ws_.cell(idx);
    for (std::size_t l = 0; l < levels_; ++l) {
      for (int t = 0; t < field.steps(); ++t) {
        mask[static_cast<std::size_t>(t)] = field.level(c, t) <= l;
      }
      table_[static_cast<std::size_t>(idx) * levels_ + l] = intervals_from_mask(mask);
    }
  }
}

IntervalTimeline::IntervalTimeline(Workspace ws, std::size_t levels,
                                   std::vector<std::vector<SafeInterval>> table)
    : ws_(std::move(ws)), levels_(levels), table_(std::move(table)) {
  if (table_.size() != static_cast<std::size_t>(ws_.cell_count()) * levels_) {
    throw std::invalid_argument("interval table must hold one entry per (cell, level)");
  }
}

std::size_t IntervalTimeline::total_intervals() const {
  std::size_t n = 0;
  for (const auto& v : table_) n += v.size();
  return n;
}

std::vector<SippState> sipp_successors(const SippState& state, const IntervalTimeline& timeline,
                                       const ConfidenceField& field, const PlanQuery& query) {
  std::vector<SippState> out;
  const Workspace& ws = field.workspace();
  const std::size_t max_level = field.max_admissible_level(query.c_min);
  if (max_level >= timeline.levels()) return out;
  const SafeInterval& here = timeline.intervals(state.vertex, state.level)[state.interval];
  const int horizon = std::min(query.T_steps, field.steps());
  // Latest departure keeps the robot inside its current interval while waiting.
  const int last_departure =
      std::min(query.allow_wait ? here.t_end - 1 : state.g, horizon - 2);
  if (last_departure < state.g) return out;

  for (Cell d : move_offsets(query.connectivity)) {
    Cell next{state.vertex.x + d.x, state.vertex.y + d.y};
    if (!move_allowed(ws, state.vertex, next)) continue;
    const bool diagonal = d.x != 0 && d.y != 0;
    for (std::size_t level = 0; level <= max_level; ++level) {
      const auto& ivs = timeline.intervals(next, level);
      for (std::size_t k = 0; k < ivs.size(); ++k) {
        const SafeInterval& iv = ivs[k];
        int depart = std::max(state.g, iv.t_start - 1);
        int depart_max = std::min(last_departure, iv.t_end - 2);
        for (; depart <= depart_max; ++depart) {
          if (!diagonal || field.transition_level(state.vertex, next, depart) <= level) break;
        }
        if (depart > depart_max) continue;
        out.push_back({next, level, k, depart + 1, -1});
      }
    }
  }
  return out;
}

namespace {

struct SippOpen {
  int f;
  std::size_t level;
  int vertex;
  std::size_t interval;
  int g;
  std::size_t node;
};

struct SippWorseFirst {
  bool operator()(const SippOpen& a, const SippOpen& b) const {
    return std::tie(a.f, a.level, a.vertex, a.interval, a.g) >
           std::tie(b.f, b.level, b.vertex, b.interval, b.g);
  }
};

}  // namespace

PlanResult plan_sipp(const PlanQuery& query, const IntervalTimeline& timeline,
                     const ConfidenceField& field) {
  const Workspace& ws = field.workspace();
  query.validate(ws);
  if (query.T_steps > field.steps()) {
    throw std::invalid_argument("confidence field covers fewer steps than the query horizon");
  }
  PlanResult result;
  const std::size_t max_level = field.max_admissible_level(query.c_min);
  if (max_level >= timeline.levels()) {
    result.infeasible_reason = "no ladder level satisfies c_min";
    return result;
  }

  // Earliest arrival only dominates later arrivals when the robot may wait;
  // without waits the arrival step becomes part of the state.
  auto state_key = [&](int vertex, std::size_t level, std::size_t interval, int g) {
    return std::make_tuple(vertex, level, interval, query.allow_wait ? 0 : g);
  };
  using Key = std::tuple<int, std::size_t, std::size_t, int>;
  std::vector<SippState> nodes;
  std::map<Key, int> best_g;
  std::priority_queue<SippOpen, std::vector<SippOpen>, SippWorseFirst> open;
  auto push = [&](SippState s) {
    auto key = state_key(ws.index(s.vertex), s.level, s.interval, s.g);
    auto it = best_g.find(key);
    if (it != best_g.end() && it->second <= s.g) return;
    best_g[key] = s.g;
    nodes.push_back(s);
    open.push({s.g + steps_to_go(s.vertex, query.goal, query.connectivity), s.level,
               ws.index(s.vertex), s.interval, s.g, nodes.size() - 1});
  };

  for (std::size_t level = 0; level <= max_level; ++level) {
    const auto& ivs = timeline.intervals(query.start, level);
    if (!ivs.empty() && ivs.front().contains(0)) push({query.start, level, 0, 0, -1});
  }
  if (open.empty()) {
    result.infeasible_reason = "start is below c_min at t=0";
    return result;
  }

  std::ptrdiff_t goal_node = -1;
  std::map<Key, bool> closed;
  while (!open.empty()) {
    SippOpen cur = open.top();
    open.pop();
    auto key = state_key(cur.vertex, cur.level, cur.interval, cur.g);
    if (closed[key] || best_g[key] < cur.g) continue;
    closed[key] = true;
    ++result.expansions;
    const SippState state = nodes[cur.node];
    if (state.vertex == query.goal) {
      goal_node = static_cast<std::ptrdiff_t>(cur.node);
      break;
    }
    for (SippState s : sipp_successors(state, timeline, field, query)) {
      s.parent = static_cast<std::ptrdiff_t>(cur.node);
      push(s);
    }
  }

  if (goal_node < 0) {
    result.infeasible_reason = "no safe path reaches the goal within the horizon";
    return result;
  }

  std::vector<const SippState*> chain;
  for (std::ptrdiff_t n = goal_node; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent) {
    chain.push_back(&nodes[static_cast<std::size_t>(n)]);
  }
  std::reverse(chain.begin(), chain.end());

  Trajectory traj;
  for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
    const SippState& s = *chain[k];
    int depart = chain[k + 1]->g - 1;
    for (int t = s.g; t <= depart; ++t) {
      traj.waypoints.push_back({s.vertex, t, field.level_confidence(s.level)});
    }
  }
  const SippState& last = *chain.back();
  traj.waypoints.push_back({last.vertex, last.g, field.level_confidence(last.level)});
  traj.total_time = last.g;
  traj.cost = last.g;
  traj.min_confidence = 1.0;
  for (const auto& w : traj.waypoints) traj.min_confidence = std::min(traj.min_confidence, w.confidence);
  result.trajectory = std::move(traj);
  return result;
}

double trajectory_risk_bound(const Trajectory& traj) {
  double r = 0.0;
  for (const Waypoint& w : traj.waypoints) r += 1.0 - w.confidence;
  return r;
}

void write_intervals_csv(std::ostream& out, const IntervalTimeline& timeline,
                         const ConfidenceField& field) {
  out << "x,y,confidence,t_start,t_end\n";
  const Workspace& ws = field.workspace();
  for (int idx = 0; idx < ws.cell_count(); ++idx) {
    Cell c = ws.cell(idx);
    for (std::size_t l = 0; l < timeline.levels(); ++l) {
      for (const SafeInterval& iv : timeline.intervals(c, l)) {
        out << c.x << ',' << c.y << ',' << fmt_double(field.ladder()[l]) << ',' << iv.t_start
            << ',' << iv.t_end << '\n';
      }
    }
  }
}

}  // namespace confplan
