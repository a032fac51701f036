#include "confplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "confplan/planner_sipp.hpp"

namespace confplan {

void TrialResult::validate() const {
  if (collided != !collision_times.empty()) {
    throw std::invalid_argument("trial " + std::to_string(trial_id) +
                                ": collided must match a nonempty collision_times");
  }
  if (reached_goal != arrival_time.has_value()) {
    throw std::invalid_argument("trial " + std::to_string(trial_id) +
                                ": arrival_time must be present iff reached_goal");
  }
}

RateCi binomial_ci(std::size_t successes, std::size_t n) {
  if (n == 0) throw std::invalid_argument("binomial_ci needs n >= 1");
  if (successes > n) throw std::invalid_argument("binomial_ci: successes exceed n");
  RateCi ci;
  ci.successes = successes;
  ci.n = n;
  const double nd = static_cast<double>(n);
  ci.rate = static_cast<double>(successes) / nd;
  ci.half_width = 3.0 * std::sqrt(ci.rate * (1.0 - ci.rate) / nd);
  ci.lower = std::max(0.0, ci.rate - ci.half_width);
  ci.upper = std::min(1.0, ci.rate + ci.half_width);
  if (successes == 0) {
    ci.upper = std::min(1.0, 3.0 / nd);
    ci.note = "rule of three: zero events, 95% upper bound 3/n";
  } else if (successes == n) {
    ci.lower = std::max(0.0, 1.0 - 3.0 / nd);
    ci.note = "rule of three: all events, 95% lower bound 1 - 3/n";
  }
  return ci;
}

TrialResult evaluate_trajectory(const Trajectory& traj, const Workspace& ws,
                                std::span<const ObstacleTrajectory> truth, double robot_radius,
                                double dt, double t0, int trial_id) {
  if (traj.waypoints.empty()) throw std::invalid_argument("cannot evaluate an empty trajectory");
  TrialResult r;
  r.trial_id = trial_id;
  for (const Waypoint& w : traj.waypoints) {
    const double t = t0 + w.t * dt;
    for (const auto& o : truth) {
      if (t < o.t_begin() - 1e-9 || t > o.t_end() + 1e-9) {
        throw std::invalid_argument("trajectory time " + std::to_string(t) +
                                    " lies outside the ground-truth span");
      }
    }
    if (point_collides(ws.center(w.cell), t, truth, robot_radius)) r.collision_times.push_back(t);
  }
  r.collided = !r.collision_times.empty();
  r.reached_goal = !r.collided;
  if (r.reached_goal) r.arrival_time = t0 + traj.total_time * dt;
  r.risk_bound = trajectory_risk_bound(traj);
  return r;
}

std::vector<CoveragePoint> coverage_curve(const CalibrationSet& test_episodes,
                                          const QuantileTable& table, double confidence) {
  if (test_episodes.n_episodes() < 100) {
    throw std::invalid_argument("coverage_curve needs at least 100 test episodes");
  }
  const std::size_t level = table.level_index(confidence);
  const std::size_t steps = std::min(test_episodes.horizon_steps(), table.horizon_steps());
  std::vector<CoveragePoint> out;
  for (std::size_t t = 0; t < steps; ++t) {
    const double q = table.threshold(level, t);
    auto col = test_episodes.sorted_column(t);
    auto covered = static_cast<std::size_t>(std::upper_bound(col.begin(), col.end(), q) - col.begin());
    out.push_back({t, q, binomial_ci(covered, col.size())});
  }
  return out;
}

AggregateReport aggregate(std::vector<TrialResult> trials) {
  if (trials.empty()) throw std::invalid_argument("aggregate needs at least one trial");
  std::sort(trials.begin(), trials.end(),
            [](const TrialResult& a, const TrialResult& b) { return a.trial_id < b.trial_id; });
  AggregateReport rep;
  rep.n_trials = trials.size();
  std::size_t collided = 0;
  std::size_t reached = 0;
  double arrival_sum = 0.0;
  double risk_sum = 0.0;
  double miscov_sum = 0.0;
  std::size_t miscov_n = 0;
  for (const TrialResult& t : trials) {
    t.validate();
    collided += t.collided ? 1 : 0;
    if (t.reached_goal) {
      ++reached;
      arrival_sum += *t.arrival_time;
    }
    risk_sum += t.risk_bound;
    rep.max_risk_bound = std::max(rep.max_risk_bound, t.risk_bound);
    if (t.mean_miscoverage) {
      miscov_sum += *t.mean_miscoverage;
      ++miscov_n;
    }
  }
  rep.collision = binomial_ci(collided, trials.size());
  rep.goal = binomial_ci(reached, trials.size());
  if (reached > 0) rep.mean_arrival_time = arrival_sum / static_cast<double>(reached);
  rep.mean_risk_bound = risk_sum / static_cast<double>(trials.size());
  rep.union_bound = rep.mean_risk_bound;
  rep.union_bound_holds = rep.collision.rate <= rep.union_bound + rep.collision.half_width;
  if (miscov_n > 0) rep.mean_miscoverage = miscov_sum / static_cast<double>(miscov_n);
  return rep;
}

namespace {

nlohmann::ordered_json ci_json(const RateCi& ci) {
  nlohmann::ordered_json j;
  j["successes"] = ci.successes;
  j["n"] = ci.n;
  j["rate"] = ci.rate;
  j["half_width"] = ci.half_width;
  j["lower"] = ci.lower;
  j["upper"] = ci.upper;
  if (!ci.note.empty()) j["note"] = ci.note;
  return j;
}

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void write_report_json(std::ostream& out, const AggregateReport& report) {
  nlohmann::ordered_json j;
  j["n_trials"] = report.n_trials;
  j["collision_rate"] = ci_json(report.collision);
  j["goal_rate"] = ci_json(report.goal);
  j["mean_arrival_time"] = opt_json(report.mean_arrival_time);
  j["mean_risk_bound"] = report.mean_risk_bound;
  j["max_risk_bound"] = report.max_risk_bound;
  j["union_bound"] = report.union_bound;
  j["union_bound_holds"] = report.union_bound_holds;
  j["mean_miscoverage"] = opt_json(report.mean_miscoverage);
  j["miscoverage_band"] = opt_json(report.miscoverage_band);
  auto curves = nlohmann::ordered_json::array();
  for (const NamedCurve& c : report.coverage_curves) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    auto pts = nlohmann::ordered_json::array();
    for (const CoveragePoint& p : c.points) {
      pts.push_back({{"t", p.t}, {"threshold", p.threshold}, {"coverage", p.coverage.rate},
                     {"half_width", p.coverage.half_width}});
    }
    cj["points"] = std::move(pts);
    curves.push_back(std::move(cj));
  }
  j["coverage_curves"] = std::move(curves);
  out << j.dump(2) << '\n';
}

void write_report_text(std::ostream& out, const AggregateReport& report) {
  auto row = [&out](const std::string& key, const std::string& value) {
    out << std::left << std::setw(20) << key << value << '\n';
  };
  auto rate = [](const RateCi& ci) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << ci.rate << "  [" << ci.lower << ", " << ci.upper
      << "]  (" << ci.successes << "/" << ci.n << ")";
    if (!ci.note.empty()) s << "  " << ci.note;
    return s.str();
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  row("trials", std::to_string(report.n_trials));
  row("collision_rate", rate(report.collision));
  row("goal_rate", rate(report.goal));
  row("mean_arrival_time", report.mean_arrival_time ? num(*report.mean_arrival_time) : "n/a");
  row("mean_risk_bound", num(report.mean_risk_bound));
  row("union_bound", num(report.union_bound) + (report.union_bound_holds ? "  holds" : "  VIOLATED"));
  if (report.mean_miscoverage) row("mean_miscoverage", num(*report.mean_miscoverage));
  if (report.miscoverage_band) row("miscoverage_band", num(*report.miscoverage_band));
  for (const NamedCurve& c : report.coverage_curves) {
    double worst = 1.0;
    for (const CoveragePoint& p : c.points) worst = std::min(worst, p.coverage.rate);
    row("coverage[" + c.name + "]", "min over t " + num(worst));
  }
}

}  // namespace confplan
