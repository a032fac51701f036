#include <doctest.h>

#include <cmath>
#include <sstream>

#include "confplan/planner_sipp.hpp"
#include "confplan/planner_spacetime.hpp"
#include "fixtures.hpp"

using namespace confplan;

namespace {

PlanQuery query_for(const fixtures::GridInstance& g, double c_min, Connectivity conn,
                    double gamma = 0.0) {
  return {g.start, g.goal, gamma, c_min, g.T, conn, true};
}

// Replays a plan against the instance: unit steps, allowed moves and the
// per-waypoint confidence being safe at its own step.
void check_plan_consistent(const fixtures::GridInstance& g, const Trajectory& traj,
                           double c_min, bool eight) {
  REQUIRE_FALSE(traj.waypoints.empty());
  CHECK(traj.waypoints.front().cell == g.start);
  CHECK(traj.waypoints.front().t == 0);
  CHECK(traj.waypoints.back().cell == g.goal);
  for (std::size_t k = 0; k < traj.waypoints.size(); ++k) {
    const Waypoint& w = traj.waypoints[k];
    CHECK(w.confidence >= c_min);
    CHECK(fixtures::cell_safe(g, w.cell, w.t, w.confidence));
    if (k == 0) continue;
    const Waypoint& p = traj.waypoints[k - 1];
    CHECK(w.t == p.t + 1);
    int dx = std::abs(w.cell.x - p.cell.x);
    int dy = std::abs(w.cell.y - p.cell.y);
    CHECK(dx <= 1);
    CHECK(dy <= 1);
    if (!eight) CHECK(dx + dy <= 1);
  }
}

fixtures::GridInstance corridor() {
  // 7x3 map whose middle row is the only free lane; an obstacle sweeps
  // down through column 3 and blocks the lane around t = 2..4.
  fixtures::GridInstance g;
  g.ws = {7.0, 3.0, 1.0, {}};
  for (int x = 0; x < 7; ++x) {
    g.ws.static_blocked_cells.push_back({x, 0});
    g.ws.static_blocked_cells.push_back({x, 2});
  }
  std::sort(g.ws.static_blocked_cells.begin(), g.ws.static_blocked_cells.end());
  g.T = 16;
  g.forecast.dt = 1.0;
  g.forecast.radii = {0.0};
  for (int t = 0; t < g.T; ++t) {
    g.forecast.at.push_back({{3.5, 3.5 - 0.5 * t}});
  }
  g.ladder = {{0.95}, 0.95};
  g.table = QuantileTable({0.95}, static_cast<std::size_t>(g.T),
                          std::vector<double>(static_cast<std::size_t>(g.T), 0.6));
  g.start = {0, 1};
  g.goal = {6, 1};
  return g;
}

}  // namespace

TEST_CASE("edge weight closed forms") {
  CHECK(*edge_weight(1.0, 0.9, 0.0) == 1.0);
  CHECK(std::abs(*edge_weight(1.0, 0.9, 1.0) - (-std::log(0.9))) <= 1e-12);
  CHECK(std::abs(*edge_weight(1.0, 0.9, 0.5) - (0.5 - 0.5 * std::log(0.9))) <= 1e-12);
  CHECK(std::abs(*edge_weight(std::sqrt(2.0), 0.5, 0.25) -
                 (0.75 * std::sqrt(2.0) - 0.25 * std::log(0.5))) <= 1e-12);
  CHECK(*edge_weight(1.0, 1.0, 1.0) == 0.0);
  CHECK_FALSE(edge_weight(1.0, 0.0, 0.5).has_value());
}

TEST_CASE("intervals from a mask agree with brute force") {
  fixtures::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<bool> mask(static_cast<std::size_t>(trial % 17));
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = fixtures::uniform01(rng) < 0.6;
    auto ivs = intervals_from_mask(mask);
    std::vector<bool> rebuilt(mask.size(), false);
    for (std::size_t k = 0; k < ivs.size(); ++k) {
      CHECK(ivs[k].t_start < ivs[k].t_end);
      if (k > 0) CHECK(ivs[k].t_start > ivs[k - 1].t_end);  // maximal, so never adjacent
      for (int t = ivs[k].t_start; t < ivs[k].t_end; ++t) rebuilt[static_cast<std::size_t>(t)] = true;
    }
    CHECK(rebuilt == mask);
  }
}

TEST_CASE("safe intervals match the clearance predicate exhaustively") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto g = fixtures::random_instance(seed);
    for (int idx = 0; idx < g.ws.cell_count(); ++idx) {
      Cell c = g.ws.cell(idx);
      for (double conf : g.ladder.levels) {
        auto ivs = compute_safe_intervals(g.ws, c, conf, g.table, g.forecast, g.T);
        for (int t = 0; t < g.T; ++t) {
          bool inside = std::any_of(ivs.begin(), ivs.end(),
                                    [t](const SafeInterval& iv) { return iv.contains(t); });
          CHECK(inside == fixtures::cell_safe(g, c, t, conf));
        }
      }
    }
  }
}

TEST_CASE("timeline intervals nest across levels and agree with compute_safe_intervals") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto g = fixtures::random_instance(seed);
    auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
    IntervalTimeline tl(field);
    for (int idx = 0; idx < g.ws.cell_count(); ++idx) {
      Cell c = g.ws.cell(idx);
      for (std::size_t l = 0; l < g.ladder.size(); ++l) {
        CHECK(tl.intervals(c, l) ==
              compute_safe_intervals(g.ws, c, g.ladder[l], g.table, g.forecast, g.T));
        if (l == 0) continue;
        for (const SafeInterval& hi : tl.intervals(c, l - 1)) {
          bool covered = std::any_of(tl.intervals(c, l).begin(), tl.intervals(c, l).end(),
                                     [&](const SafeInterval& lo) {
                                       return lo.t_start <= hi.t_start && hi.t_end <= lo.t_end;
                                     });
          CHECK(covered);
        }
      }
    }
  }
}

TEST_CASE("space-time A* at gamma 0 finds the BFS earliest arrival") {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    auto g = fixtures::random_instance(seed);
    auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
    auto res = plan_spacetime(query_for(g, 0.8, Connectivity::four), field);
    int oracle = fixtures::bfs_earliest_arrival(g, 0.8, false);
    CAPTURE(seed);
    CHECK(res.feasible() == (oracle >= 0));
    if (res.feasible()) {
      CHECK(res.trajectory->total_time == oracle);
      check_plan_consistent(g, *res.trajectory, 0.8, false);
    }
  }
}

TEST_CASE("CP-SIPP matches the BFS oracle in both connectivities") {
  for (std::uint64_t seed = 100; seed < 180; ++seed) {
    auto g = fixtures::random_instance(seed);
    auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
    IntervalTimeline tl(field);
    for (bool eight : {false, true}) {
      for (double c_min : {0.95, 0.8}) {
        for (bool wait : {true, false}) {
          auto q = query_for(g, c_min, eight ? Connectivity::eight : Connectivity::four);
          q.allow_wait = wait;
          auto res = plan_sipp(q, tl, field);
          int oracle = fixtures::bfs_earliest_arrival(g, c_min, eight, wait);
          CAPTURE(seed);
          CAPTURE(eight);
          CAPTURE(wait);
          CHECK(res.feasible() == (oracle >= 0));
          if (res.feasible()) {
            CHECK(res.trajectory->total_time == oracle);
            check_plan_consistent(g, *res.trajectory, c_min, eight);
          }
        }
      }
    }
  }
}

TEST_CASE("CP-SIPP and space-time A* agree on arrival time") {
  for (std::uint64_t seed = 500; seed < 560; ++seed) {
    auto g = fixtures::random_instance(seed);
    auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
    IntervalTimeline tl(field);
    auto q = query_for(g, 0.8, Connectivity::four);
    auto a = plan_spacetime(q, field);
    auto b = plan_sipp(q, tl, field);
    CAPTURE(seed);
    REQUIRE(a.feasible() == b.feasible());
    if (a.feasible()) CHECK(a.trajectory->total_time == b.trajectory->total_time);
  }
}

TEST_CASE("CP-SIPP waits in a corridor for a crossing obstacle") {
  auto g = corridor();
  auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
  IntervalTimeline tl(field);
  auto q = query_for(g, 0.95, Connectivity::four);
  auto res = plan_sipp(q, tl, field);
  REQUIRE(res.feasible());
  const auto& wps = res.trajectory->waypoints;
  bool waited = false;
  for (std::size_t k = 1; k < wps.size(); ++k) waited = waited || wps[k].cell == wps[k - 1].cell;
  CHECK(waited);
  CHECK(res.trajectory->total_time == fixtures::bfs_earliest_arrival(g, 0.95, false));
  CHECK(res.trajectory->total_time > 6);
  check_plan_consistent(g, *res.trajectory, 0.95, false);

  // Without waits the robot has to pace back and forth instead.
  q.allow_wait = false;
  auto paced = plan_sipp(q, tl, field);
  auto paced_st = plan_spacetime(q, field);
  int oracle = fixtures::bfs_earliest_arrival(g, 0.95, false, false);
  REQUIRE(oracle > 0);
  REQUIRE(paced.feasible());
  REQUIRE(paced_st.feasible());
  CHECK(paced.trajectory->total_time == oracle);
  CHECK(paced_st.trajectory->total_time == oracle);
  for (std::size_t k = 1; k < paced.trajectory->waypoints.size(); ++k) {
    CHECK_FALSE(paced.trajectory->waypoints[k].cell == paced.trajectory->waypoints[k - 1].cell);
  }
}

TEST_CASE("infeasibility verdicts carry reasons") {
  auto g = corridor();
  auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
  IntervalTimeline tl(field);

  auto q = query_for(g, 0.99, Connectivity::four);
  CHECK(plan_sipp(q, tl, field).infeasible_reason == "no ladder level satisfies c_min");
  CHECK(plan_spacetime(q, field).infeasible_reason == "no ladder level satisfies c_min");

  q = query_for(g, 0.95, Connectivity::four);
  q.T_steps = 4;
  CHECK(plan_sipp(q, tl, field).infeasible_reason ==
        "no safe path reaches the goal within the horizon");

  // Obstacle sitting on the start cell.
  g.forecast.at[0][0] = {0.5, 1.5};
  auto field2 = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
  IntervalTimeline tl2(field2);
  q.T_steps = g.T;
  CHECK(plan_sipp(q, tl2, field2).infeasible_reason == "start is below c_min at t=0");
  CHECK(plan_spacetime(q, field2).infeasible_reason == "start is below c_min at t=0");
}

TEST_CASE("start equal to goal is a zero-length plan") {
  auto g = corridor();
  g.goal = g.start;
  auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
  IntervalTimeline tl(field);
  auto res = plan_sipp(query_for(g, 0.95, Connectivity::four), tl, field);
  REQUIRE(res.feasible());
  CHECK(res.trajectory->total_time == 0);
  CHECK(res.trajectory->waypoints.size() == 1);
}

TEST_CASE("risk bound sums miscoverage over every occupied step") {
  Trajectory traj;
  for (int t = 0; t < 8; ++t) traj.waypoints.push_back({{t, 0}, t, 0.95});
  CHECK(std::abs(trajectory_risk_bound(traj) - 8 * 0.05) <= 1e-12);
  traj.waypoints[3].confidence = 0.8;
  CHECK(std::abs(trajectory_risk_bound(traj) - (7 * 0.05 + 0.2)) <= 1e-12);
}

TEST_CASE("gamma 1 minimizes the log-confidence cost, gamma 0 the arrival time") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    auto g = fixtures::random_instance(seed, 8, 30, 3, 0.05);
    auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
    auto fast = plan_spacetime(query_for(g, 0.8, Connectivity::four, 0.0), field);
    auto safe = plan_spacetime(query_for(g, 0.8, Connectivity::four, 1.0), field);
    REQUIRE(fast.feasible() == safe.feasible());
    if (!fast.feasible()) continue;
    ++checked;
    // gamma = 1 minimizes sum of -log c; compare in that currency.
    double nll_fast = 0.0;
    double nll_safe = 0.0;
    for (const auto& w : fast.trajectory->waypoints) nll_fast -= std::log(w.confidence);
    for (const auto& w : safe.trajectory->waypoints) nll_safe -= std::log(w.confidence);
    CHECK(nll_safe <= nll_fast + 1e-9);
    CHECK(fast.trajectory->total_time <= safe.trajectory->total_time);
  }
  CHECK(checked > 10);
}

TEST_CASE("trajectory and interval CSV headers") {
  auto g = corridor();
  auto field = ConfidenceField::from_table(g.ws, g.table, g.ladder, g.forecast);
  IntervalTimeline tl(field);
  auto res = plan_sipp(query_for(g, 0.95, Connectivity::four), tl, field);
  REQUIRE(res.feasible());
  std::ostringstream a;
  write_trajectory_csv(a, *res.trajectory, g.ws);
  CHECK(a.str().rfind("t,x,y,confidence\n0,0.5,1.5,0.95\n", 0) == 0);
  std::ostringstream b;
  write_intervals_csv(b, tl, field);
  CHECK(b.str().rfind("x,y,confidence,t_start,t_end\n", 0) == 0);
}
