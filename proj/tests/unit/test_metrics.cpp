#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "confplan/metrics.hpp"
#include "fixtures.hpp"

using namespace confplan;

namespace {

std::vector<ObstacleTrajectory> crossing_truth() {
  // Obstacle walks down column x = 2.5 one cell per step.
  std::vector<Sample> s;
  for (int t = 0; t <= 10; ++t) s.push_back({static_cast<double>(t), {2.5, 9.5 - t}});
  return {ObstacleTrajectory(0, s, 0.2)};
}

Trajectory row_trajectory(int y, int length) {
  Trajectory traj;
  for (int t = 0; t < length; ++t) traj.waypoints.push_back({{t, y}, t, 0.95});
  traj.total_time = length - 1;
  return traj;
}

TrialResult trial(int id, bool collided, std::optional<double> arrival, double risk) {
  TrialResult r;
  r.trial_id = id;
  r.collided = collided;
  if (collided) r.collision_times = {1.0};
  r.reached_goal = arrival.has_value();
  r.arrival_time = arrival;
  r.risk_bound = risk;
  return r;
}

}  // namespace

TEST_CASE("binomial interval and the rule of three") {
  auto ci = binomial_ci(10, 100);
  CHECK(ci.rate == doctest::Approx(0.1));
  CHECK(ci.half_width == doctest::Approx(0.09));
  CHECK(ci.lower == doctest::Approx(0.01));
  CHECK(ci.note.empty());

  auto zero = binomial_ci(0, 100);
  CHECK(zero.rate == 0.0);
  CHECK(zero.lower == 0.0);
  CHECK(zero.upper == doctest::Approx(0.03));
  CHECK(zero.note.find("rule of three") != std::string::npos);

  auto all = binomial_ci(50, 50);
  CHECK(all.upper == 1.0);
  CHECK(all.lower == doctest::Approx(0.94));
  CHECK_THROWS_AS(binomial_ci(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(binomial_ci(3, 2), std::invalid_argument);
}

TEST_CASE("evaluating a trajectory in free space") {
  Workspace ws{10.0, 10.0, 1.0, {}};
  auto truth = crossing_truth();
  auto r = evaluate_trajectory(row_trajectory(9, 2), ws, truth, 0.0);
  CHECK_FALSE(r.collided);
  CHECK(r.reached_goal);
  CHECK(*r.arrival_time == 1.0);
  CHECK(r.risk_bound == doctest::Approx(0.1));
  CHECK_NOTHROW(r.validate());
}

TEST_CASE("evaluating a trajectory that meets the obstacle") {
  Workspace ws{10.0, 10.0, 1.0, {}};
  auto truth = crossing_truth();
  // The robot parks on cell (2, 5) from t = 2; the obstacle passes over it at t = 4 only.
  Trajectory traj;
  for (int t = 0; t <= 6; ++t) traj.waypoints.push_back({{std::min(t, 2), 5}, t, 0.95});
  traj.total_time = 6;
  auto r = evaluate_trajectory(traj, ws, truth, 0.0);
  CHECK(r.collided);
  CHECK_FALSE(r.reached_goal);
  REQUIRE_FALSE(r.collision_times.empty());
  CHECK(r.collision_times.front() == 4.0);
  CHECK_NOTHROW(r.validate());
}

TEST_CASE("trajectory evaluation rejects bad input") {
  Workspace ws{10.0, 10.0, 1.0, {}};
  auto truth = crossing_truth();
  CHECK_THROWS_AS(evaluate_trajectory(Trajectory{}, ws, truth, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_trajectory(row_trajectory(9, 3), ws, truth, 0.0, 1.0, 9.0),
                  std::invalid_argument);
}

TEST_CASE("coverage curve extremes") {
  auto cal = fixtures::synthetic_calibration(1, 200, 4);
  double max_score = 0.0;
  for (std::size_t t = 0; t < 4; ++t) max_score = std::max(max_score, cal.sorted_column(t).back());

  QuantileTable huge({0.9}, 4, std::vector<double>(4, max_score * 10.0));
  for (const auto& p : coverage_curve(cal, huge, 0.9)) CHECK(p.coverage.rate == 1.0);

  QuantileTable zero({0.9}, 4, std::vector<double>(4, 0.0));
  for (const auto& p : coverage_curve(cal, zero, 0.9)) CHECK(p.coverage.rate == 0.0);

  auto small = fixtures::synthetic_calibration(1, 50, 4);
  CHECK_THROWS_AS(coverage_curve(small, zero, 0.9), std::invalid_argument);
}

TEST_CASE("coverage of an independent test set stays near nominal") {
  ConfidenceLadder ladder{{0.9}, 0.9};
  auto table = build_quantile_table(fixtures::synthetic_calibration(100, 400, 5), ladder);
  auto test = fixtures::synthetic_calibration(200, 2000, 5);
  for (const auto& p : coverage_curve(test, table, 0.9)) {
    CHECK(p.coverage.rate >= 0.9 - 3.0 * std::sqrt(0.09 * (1.0 / 400 + 1.0 / 2000)));
  }
}

TEST_CASE("aggregation by hand") {
  std::vector<TrialResult> trials{trial(0, false, 10.0, 0.4), trial(1, true, std::nullopt, 0.5),
                                  trial(2, false, 14.0, 0.3), trial(3, false, std::nullopt, 0.2)};
  auto rep = aggregate(trials);
  CHECK(rep.n_trials == 4);
  CHECK(rep.collision.rate == 0.25);
  CHECK(rep.goal.rate == 0.5);
  CHECK(*rep.mean_arrival_time == 12.0);
  CHECK(rep.mean_risk_bound == doctest::Approx(0.35));
  CHECK(rep.max_risk_bound == 0.5);
  CHECK(rep.union_bound == doctest::Approx(0.35));
  CHECK(rep.union_bound_holds);
}

TEST_CASE("aggregation is invariant to trial order") {
  std::vector<TrialResult> trials;
  for (int k = 0; k < 40; ++k) {
    trials.push_back(trial(k, k % 7 == 0, k % 3 == 0 ? std::optional<double>(k * 0.37) : std::nullopt,
                           0.01 * k + 0.001 * (k % 5)));
  }
  auto forward = aggregate(trials);
  std::reverse(trials.begin(), trials.end());
  std::rotate(trials.begin(), trials.begin() + 13, trials.end());
  auto shuffled = aggregate(trials);
  std::ostringstream a;
  std::ostringstream b;
  write_report_json(a, forward);
  write_report_json(b, shuffled);
  CHECK(a.str() == b.str());
}

TEST_CASE("aggregation extremes") {
  std::vector<TrialResult> all;
  for (int k = 0; k < 5; ++k) all.push_back(trial(k, true, std::nullopt, 0.1));
  CHECK(aggregate(all).collision.rate == 1.0);

  std::vector<TrialResult> none;
  for (int k = 0; k < 100; ++k) none.push_back(trial(k, false, 1.0, 0.1));
  auto rep = aggregate(none);
  CHECK(rep.collision.rate == 0.0);
  CHECK(rep.collision.upper == doctest::Approx(0.03));
  CHECK_FALSE(rep.collision.note.empty());
  CHECK_FALSE(rep.mean_arrival_time == std::nullopt);

  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
  TrialResult bad = trial(0, true, std::nullopt, 0.0);
  bad.collision_times.clear();
  CHECK_THROWS_AS(aggregate({bad}), std::invalid_argument);
}

TEST_CASE("report exports") {
  auto rep = aggregate({trial(0, false, 3.0, 0.2)});
  std::ostringstream js;
  write_report_json(js, rep);
  CHECK(js.str().find("\"collision_rate\"") != std::string::npos);
  CHECK(js.str().find("\"union_bound\"") != std::string::npos);
  std::ostringstream txt;
  write_report_text(txt, rep);
  CHECK(txt.str().rfind("trials              1\n", 0) == 0);
}
