#include <doctest.h>

#include <numbers>
#include <sstream>

#include "confplan/env_sim.hpp"

using namespace confplan;

namespace {

Scenario two_obstacle_scenario() {
  Scenario s;
  s.workspace = {20.0, 20.0, 1.0, {}};
  s.horizon_T = 10.0;
  s.dt = 0.5;
  s.obstacles.push_back({0, ConstantVelocityMotion{{2.0, 2.0}, {1.0, 0.5}}, 0.3});
  s.obstacles.push_back({1, SinusoidalMotion{{10.0, 10.0}, {0.0, 0.0}, {0.0, 1.0}, 2.0, 4.0, 0.0}, 0.0});
  return s;
}

}  // namespace

TEST_CASE("sinusoidal motion matches its closed form") {
  SinusoidalMotion m{{5.0, 5.0}, {0.1, 0.0}, {0.0, 3.0}, 2.0, 4.0, 0.25};
  for (double t : {0.0, 0.7, 1.0, 2.5, 3.9}) {
    double s = std::sin(2.0 * std::numbers::pi * t / 4.0 + 0.25);
    Vec2 p = motion_position(m, t);
    CHECK(p.x == doctest::Approx(5.0 + 0.1 * t).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(5.0 + 2.0 * s).epsilon(1e-12));
  }
}

TEST_CASE("waypoint motion interpolates and holds at both ends") {
  WaypointMotion m{{{1.0, {0.0, 0.0}}, {3.0, {4.0, 2.0}}}};
  CHECK(motion_position(m, 0.0) == Vec2{0.0, 0.0});
  CHECK(motion_position(m, 2.0) == Vec2{2.0, 1.0});
  CHECK(motion_position(m, 9.0) == Vec2{4.0, 2.0});
}

TEST_CASE("trajectory interpolation and span checks") {
  ObstacleTrajectory tr(7, {{0.0, {0.0, 0.0}}, {1.0, {2.0, 4.0}}, {2.0, {2.0, 4.0}}}, 0.5);
  CHECK(tr.position_at(0.5) == Vec2{1.0, 2.0});
  CHECK(tr.position_at(1.0) == Vec2{2.0, 4.0});
  CHECK(tr.position_at(2.0) == Vec2{2.0, 4.0});
  CHECK_THROWS_AS(tr.position_at(-0.01), std::out_of_range);
  CHECK_THROWS_AS(tr.position_at(2.01), std::out_of_range);

  CHECK_THROWS_AS(ObstacleTrajectory(0, {{0.0, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(ObstacleTrajectory(0, {{0.0, {}}, {0.0, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(ObstacleTrajectory(0, {{0.0, {}}, {1.0, {}}}, -1.0), std::invalid_argument);
}

TEST_CASE("simulate_truth samples every dt and reports escapes") {
  Scenario s = two_obstacle_scenario();
  auto truth = simulate_truth(s);
  REQUIRE(truth.size() == 2);
  CHECK(truth[0].samples().size() == 21);
  CHECK(truth[0].position_at(4.0) == Vec2{6.0, 4.0});
  CHECK(truth[1].position_at(1.0).y == doctest::Approx(12.0));

  auto track = simulate_track(s, 3);
  CHECK(track[0].samples().size() == 24);
  CHECK(track[0].t_begin() == doctest::Approx(-1.5));

  s.obstacles[0].motion = ConstantVelocityMotion{{2.0, 2.0}, {3.0, 0.0}};
  CHECK_THROWS_AS(simulate_truth(s), ScenarioError);
}

TEST_CASE("scenario validation") {
  Scenario s = two_obstacle_scenario();
  s.dt = 0.3;
  CHECK_THROWS_AS(s.validate(), ScenarioError);
  s = two_obstacle_scenario();
  s.workspace.static_blocked_cells = {{25, 1}};
  CHECK_THROWS_AS(s.validate(), ScenarioError);
  s = two_obstacle_scenario();
  s.obstacles[1].radius = -0.1;
  CHECK_THROWS_AS(s.validate(), ScenarioError);
}

TEST_CASE("constant-velocity predictor is exact on linear motion") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 2);
  Predictor p{PredictorKind::constant_velocity, 0.0, 2};
  // Sample index 2 is t = 0.
  auto pred = predict(p, track[0], 3, 8, s.dt, 1);
  REQUIRE(pred.samples().size() == 8);
  for (const Sample& smp : pred.samples()) {
    Vec2 truth = track[0].position_at(smp.t);
    CHECK(smp.position.x == doctest::Approx(truth.x).epsilon(1e-12));
    CHECK(smp.position.y == doctest::Approx(truth.y).epsilon(1e-12));
  }
  CHECK(pred.samples().front().t == doctest::Approx(0.5));
}

TEST_CASE("lookback of one predicts a stationary obstacle") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 2);
  auto pred = predict({PredictorKind::constant_velocity, 0.0, 1}, track[0], 3, 4, s.dt, 0);
  for (const Sample& smp : pred.samples()) CHECK(smp.position == track[0].samples()[2].position);
}

TEST_CASE("single-step forecast keeps the two-sample invariant") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 2);
  auto pred = predict({}, track[0], 3, 1, s.dt, 0);
  REQUIRE(pred.samples().size() == 2);
  CHECK(pred.samples()[0].t == doctest::Approx(0.0));
  CHECK(pred.samples()[1].t == doctest::Approx(0.5));
}

TEST_CASE("noisy predictors replay under a fixed seed") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 2);
  for (PredictorKind kind : {PredictorKind::noisy_kinematic, PredictorKind::oracle_with_noise}) {
    Predictor p{kind, 0.2, 2};
    auto a = predict(p, track[1], 5, 6, s.dt, 42);
    auto b = predict(p, track[1], 5, 6, s.dt, 42);
    auto c = predict(p, track[1], 5, 6, s.dt, 43);
    bool differs = false;
    for (std::size_t k = 0; k < a.samples().size(); ++k) {
      CHECK(a.samples()[k].position == b.samples()[k].position);
      differs = differs || !(a.samples()[k].position == c.samples()[k].position);
    }
    CHECK(differs);
  }
}

TEST_CASE("noise-free oracle predictor returns the truth") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 2);
  auto pred = predict({PredictorKind::oracle_with_noise, 0.0, 2}, track[1], 3, 5, s.dt, 9);
  for (const Sample& smp : pred.samples()) CHECK(smp.position == track[1].position_at(smp.t));
}

TEST_CASE("predictor rejects short histories") {
  Scenario s = two_obstacle_scenario();
  auto track = simulate_track(s, 0);
  CHECK_THROWS_AS(predict({PredictorKind::constant_velocity, 0.0, 3}, track[0], 2, 3, s.dt, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(predict({}, track[0], 1000, 3, s.dt, 0), std::invalid_argument);
}

TEST_CASE("point collision boundary is inclusive") {
  ObstacleTrajectory o(0, {{0.0, {0.0, 0.0}}, {1.0, {0.0, 0.0}}}, 1.0);
  std::vector<ObstacleTrajectory> truth{o};
  CHECK(point_collides({1.5, 0.0}, 0.5, truth, 0.5));
  CHECK_FALSE(point_collides({1.5 + 1e-9, 0.0}, 0.5, truth, 0.5));
  CHECK(true_clearance({3.0, 4.0}, 0.0, truth, 0.5) == doctest::Approx(3.5));
}

TEST_CASE("forecast interpolates between steps and holds past the end") {
  Forecast f;
  f.dt = 0.5;
  f.radii = {0.0};
  f.at = {{{0.0, 0.0}}, {{1.0, 0.0}}, {{1.0, 2.0}}};
  CHECK(f.position(0.25, 0) == Vec2{0.5, 0.0});
  CHECK(f.position(0.75, 0) == Vec2{1.0, 1.0});
  CHECK(f.position(5.0, 0) == Vec2{1.0, 2.0});
  CHECK(f.position(-1.0, 0) == Vec2{0.0, 0.0});
}

TEST_CASE("workspace cell geometry") {
  Workspace ws{10.0, 5.0, 0.5, {{1, 2}}};
  CHECK(ws.cols() == 20);
  CHECK(ws.rows() == 10);
  CHECK(ws.is_blocked({1, 2}));
  CHECK_FALSE(ws.is_free({1, 2}));
  CHECK_FALSE(ws.in_bounds({20, 0}));
  CHECK(ws.center({1, 2}) == Vec2{0.75, 1.25});
  CHECK(ws.cell_at({0.75, 1.25}) == Cell{1, 2});
  CHECK(ws.cell(ws.index({7, 3})) == Cell{7, 3});
}

TEST_CASE("trajectory CSV layout") {
  ObstacleTrajectory o(3, {{0.0, {1.0, 2.0}}, {0.5, {1.5, 2.0}}});
  std::vector<ObstacleTrajectory> v{o};
  std::ostringstream out;
  write_trajectories_csv(out, v);
  CHECK(out.str() == "obstacle_id,t,x,y\n3,0,1,2\n3,0.5,1.5,2\n");
}
