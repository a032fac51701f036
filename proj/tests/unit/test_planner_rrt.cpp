#include <doctest.h>

#include <cmath>
#include <sstream>

#include "confplan/planner_rrt.hpp"
#include "fixtures.hpp"

using namespace confplan;

namespace {

RrtConfig open_config(std::uint64_t seed) {
  RrtConfig cfg;
  cfg.goal = {{18.0, 18.0}, 1.0};
  cfg.horizon_H = 50.0;
  cfg.max_iterations = 4000;
  cfg.rng_seed = seed;
  return cfg;
}

Forecast static_obstacle(Vec2 at, double radius, int steps = 60) {
  Forecast f;
  f.dt = 1.0;
  f.radii = {radius};
  for (int k = 0; k < steps; ++k) f.at.push_back({at});
  return f;
}

RadiusFn constant_radius(double r) {
  return [r](double, double) { return r; };
}

double path_length(const std::vector<TreeNode>& path) {
  double len = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) len += distance(path[k].position, path[k - 1].position);
  return len;
}

Scenario benign_scenario() {
  Scenario s;
  s.workspace = {20.0, 20.0, 1.0, {}};
  s.horizon_T = 60.0;
  s.dt = 1.0;
  s.obstacles.push_back({0, ConstantVelocityMotion{{18.0, 3.0}, {0.0, 0.0}}, 0.5});
  return s;
}

}  // namespace

TEST_CASE("confidence schedule endpoints and midpoint") {
  RrtConfig cfg;
  cfg.c_start = 0.95;
  cfg.c_end = 0.6;
  cfg.horizon_H = 50.0;
  CHECK(std::abs(confidence_schedule(0.0, cfg) - 0.95) <= 1e-12);
  CHECK(std::abs(confidence_schedule(50.0, cfg) - 0.6) <= 1e-12);
  CHECK(std::abs(schedule_value(25.0, cfg) - 0.775) <= 1e-12);
  CHECK(std::abs(confidence_schedule(80.0, cfg) - 0.6) <= 1e-12);
}

TEST_CASE("schedule snaps down onto the ladder") {
  RrtConfig cfg;
  cfg.c_start = 0.95;
  cfg.c_end = 0.6;
  cfg.horizon_H = 50.0;
  cfg.ladder = {0.6, 0.95, 0.9, 0.8};
  CHECK(confidence_schedule(0.0, cfg) == 0.95);
  CHECK(confidence_schedule(1.0, cfg) == 0.9);
  CHECK(confidence_schedule(25.0, cfg) == 0.6);
  CHECK(confidence_schedule(10.0, cfg) == 0.8);  // 0.88 before snapping
  double prev = 1.0;
  for (double t = 0.0; t <= 60.0; t += 0.37) {
    double c = confidence_schedule(t, cfg);
    CHECK(c <= schedule_value(t, cfg) + 1e-12);
    CHECK(c <= prev);
    prev = c;
  }
}

TEST_CASE("rrt config validation") {
  RrtConfig cfg;
  cfg.c_start = 0.5;
  cfg.c_end = 0.9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.v_max = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.step_size = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("edge safety at a constructed tangency") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  RrtConfig cfg;
  Forecast f = static_obstacle({5.0, 0.0}, 0.0);
  // The sample at x = 5 sits exactly 1 m from the obstacle center.
  const double eps = 1e-9;
  CHECK(edge_safe({0.0, 1.0}, 0.0, {10.0, 1.0}, 10.0, f, constant_radius(1.0 - eps), cfg, ws));
  CHECK_FALSE(edge_safe({0.0, 1.0}, 0.0, {10.0, 1.0}, 10.0, f, constant_radius(1.0 + eps), cfg, ws));
  CHECK_FALSE(edge_safe({0.0, 0.0}, 0.0, {10.0, 0.0}, 10.0, f, constant_radius(0.1), cfg, ws));
  CHECK(edge_safe({0.0, 10.0}, 0.0, {10.0, 10.0}, 10.0, f, constant_radius(0.5), cfg, ws));

  // Node-only mode misses the crossing but still sees the endpoint.
  cfg.node_only_check = true;
  CHECK(edge_safe({0.0, 0.0}, 0.0, {10.0, 0.0}, 10.0, f, constant_radius(0.1), cfg, ws));
  CHECK_FALSE(edge_safe({0.0, 0.0}, 0.0, {5.0, 0.0}, 5.0, f, constant_radius(0.1), cfg, ws));
}

TEST_CASE("edge safety interpolates predictions in time") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  RrtConfig cfg;
  Forecast f;
  f.dt = 1.0;
  f.radii = {0.0};
  // Obstacle sweeps along y = 5 from x = 0 to x = 10 over ten steps.
  for (int k = 0; k <= 10; ++k) f.at.push_back({{static_cast<double>(k), 5.0}});
  // The robot waits at (5, 5.3): hit at t = 5 only.
  CHECK_FALSE(edge_safe({5.0, 5.3}, 4.0, {5.0, 5.3}, 6.0, f, constant_radius(0.5), cfg, ws));
  CHECK(edge_safe({5.0, 5.3}, 6.0, {5.0, 5.3}, 8.0, f, constant_radius(0.5), cfg, ws));
}

TEST_CASE("edges may not leave the workspace or enter blocked cells") {
  Workspace ws{10.0, 10.0, 1.0, {{5, 5}}};
  RrtConfig cfg;
  Forecast empty{1.0, {}, {{}, {}}};
  CHECK_FALSE(edge_safe({4.5, 5.5}, 0.0, {6.5, 5.5}, 2.0, empty, constant_radius(0.0), cfg, ws));
  CHECK_FALSE(edge_safe({9.5, 1.0}, 0.0, {10.5, 1.0}, 1.0, empty, constant_radius(0.0), cfg, ws));
}

TEST_CASE("open workspace paths are near straight in most seeds") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  Forecast empty{1.0, {}, {{}, {}}};
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RrtConfig cfg = open_config(seed);
    TreeNode start{{2.0, 2.0}, 0.0, cfg.c_start, -1};
    auto res = grow_tree(start, cfg, ws, empty, constant_radius(0.0));
    REQUIRE(res.success);
    double straight = distance(start.position, cfg.goal.center) - cfg.goal.radius;
    good += path_length(res.path) <= 2.0 * straight ? 1 : 0;
  }
  CHECK(good >= 95);
}

TEST_CASE("tree invariants: timing, confidence and replayed acceptance") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  Forecast f;
  f.dt = 1.0;
  f.radii = {0.5, 0.5};
  for (int k = 0; k < 60; ++k) {
    f.at.push_back({{10.0, 2.0 + 0.3 * k}, {4.0 + 0.2 * k, 12.0}});
  }
  RrtConfig cfg = open_config(4);
  cfg.ladder = {0.95, 0.9, 0.8, 0.6};
  auto radius = [](double t, double c) { return 0.2 + 0.02 * t + (c - 0.6); };
  TreeNode start{{2.0, 2.0}, 0.0, cfg.c_start, -1};
  auto res = grow_tree(start, cfg, ws, f, radius);
  REQUIRE(res.success);
  for (std::size_t k = 1; k < res.tree.size(); ++k) {
    const TreeNode& n = res.tree[k];
    const TreeNode& p = res.tree[static_cast<std::size_t>(n.parent)];
    CHECK(std::abs(n.t - p.t - distance(n.position, p.position) / cfg.v_max) <= 1e-12);
    CHECK(distance(n.position, p.position) <= cfg.step_size + 1e-12);
    CHECK(n.confidence == confidence_schedule(n.t, cfg));
    CHECK(edge_safe(p.position, p.t, n.position, n.t, f, radius, cfg, ws));
  }
  for (std::size_t k = 2; k < res.path.size(); ++k) {
    CHECK(res.path[1].confidence >= res.path[k].confidence);
  }
}

TEST_CASE("tree growth is deterministic per seed") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  Forecast f = static_obstacle({10.0, 10.0}, 1.0);
  RrtConfig cfg = open_config(12);
  TreeNode start{{2.0, 2.0}, 0.0, cfg.c_start, -1};
  auto a = grow_tree(start, cfg, ws, f, constant_radius(0.5));
  auto b = grow_tree(start, cfg, ws, f, constant_radius(0.5));
  REQUIRE(a.tree.size() == b.tree.size());
  for (std::size_t k = 0; k < a.tree.size(); ++k) {
    CHECK(a.tree[k].position == b.tree[k].position);
    CHECK(a.tree[k].parent == b.tree[k].parent);
  }
}

TEST_CASE("degenerate trees") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  Forecast f = static_obstacle({10.0, 10.0}, 0.0);
  RrtConfig cfg = open_config(1);

  TreeNode inside{{18.2, 17.9}, 0.0, cfg.c_start, -1};
  auto trivial = grow_tree(inside, cfg, ws, f, constant_radius(0.1));
  CHECK(trivial.success);
  CHECK(trivial.path.size() == 1);

  cfg.max_iterations = 300;
  TreeNode start{{2.0, 2.0}, 0.0, cfg.c_start, -1};
  auto start_unsafe = grow_tree(start, cfg, ws, f, constant_radius(100.0));
  CHECK_FALSE(start_unsafe.success);
  CHECK(start_unsafe.failure_reason == "start is not conformally safe");
  CHECK(start_unsafe.iterations == 0);

  auto exhausted = grow_tree(start, cfg, ws, f, constant_radius(100.0), false);
  CHECK_FALSE(exhausted.success);
  CHECK(exhausted.iterations == 300);
  CHECK(exhausted.tree.size() == 1);
  CHECK(exhausted.failure_reason == "no path to the goal within max_iterations");
}

TEST_CASE("quantile-table overload inflates by lambda") {
  Workspace ws{20.0, 20.0, 1.0, {}};
  Forecast f = static_obstacle({10.0, 10.0}, 0.0);
  QuantileTable table({0.95}, 3, {0.5, 1.0, 1.5});
  AcpState acp;
  acp.lambda = 2.0;
  auto r = acp_radius_fn(acp, table, 1.0);
  CHECK(r(0.0, 0.95) == 1.0);
  CHECK(r(0.4, 0.95) == 2.0);
  CHECK(r(1.0, 0.95) == 2.0);
  CHECK(r(7.0, 0.95) == 3.0);

  RrtConfig cfg = open_config(3);
  cfg.c_start = 0.95;
  cfg.c_end = 0.95;
  TreeNode start{{2.0, 2.0}, 0.0, 0.95, -1};
  CHECK(grow_tree(start, cfg, ws, f, acp, table).success);
}

TEST_CASE("average path confidence") {
  CHECK(average_path_confidence({{{}, 0.0, 0.9, -1}}) == doctest::Approx(0.9));
  CHECK(average_path_confidence({{{}, 0.0, 1.0, -1}, {{}, 1.0, 0.8, 0}, {{}, 2.0, 0.6, 1}}) ==
        doctest::Approx(0.8));
  CHECK_THROWS_AS(average_path_confidence({}), std::invalid_argument);
}

TEST_CASE("benign receding-horizon run reaches the goal") {
  Scenario s = benign_scenario();
  RecedingConfig rc;
  rc.mode = RrtMode::acp;
  rc.start = {2.0, 10.0};
  rc.rrt.goal = {{18.0, 10.0}, 1.0};
  rc.rrt.horizon_H = 20.0;
  rc.rrt.ladder = {0.95, 0.9, 0.8, 0.6};
  rc.history_steps = 2;
  rc.gate.warmup_W0 = 10;
  rc.gate.block_len_B = 2;
  rc.seed = 17;
  auto track = simulate_track(s, rc.history_steps);
  auto cal = fixtures::synthetic_calibration(2, 100, 21, 0.05, 0.02);
  auto table = build_quantile_table(cal, {{0.95, 0.9, 0.8, 0.6}, 0.6});
  auto log = receding_horizon_run(s, track, table, cal, rc);
  CHECK(log.reached_goal);
  CHECK_FALSE(log.collided);
  CHECK(log.stalls == 0);
  REQUIRE(log.arrival_time.has_value());
  CHECK(*log.arrival_time <= 2.0 * 15.0);  // twice the straight-line time
  // A zero-noise forecaster never misses, so lambda can only shrink.
  for (const RunStep& st : log.steps) {
    CHECK(st.lambda <= 1.0);
    CHECK(st.e <= 0);
  }
  for (const RunStep& st : log.steps) {
    for (double c : st.path_confidences) CHECK(st.c_next >= c);
  }

  auto again = receding_horizon_run(s, track, table, cal, rc);
  std::ostringstream a;
  std::ostringstream b;
  write_run_log_jsonl(a, log);
  write_run_log_jsonl(b, again);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("{\"t\":0.0,\"x\":", 0) == 0);
}
