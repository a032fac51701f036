#include "confplan/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "confplan/format.hpp"
#include "confplan/harness/episodes.hpp"
#include "confplan/harness/parallel.hpp"
#include "confplan/planner_spacetime.hpp"
#include "confplan/rng.hpp"

namespace confplan::harness {

namespace {

namespace fs = std::filesystem;

// Independent seed streams derived from the master seed.
constexpr std::uint64_t kCalibrationStream = 1;
constexpr std::uint64_t kTrialStream = 2;
constexpr std::uint64_t kCoverageStream = 3;

void write_file(const fs::path& dir, const std::string& name,
                const std::function<void(std::ostream&)>& body) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  body(out);
  if (!out) throw std::runtime_error("error while writing " + (dir / name).string());
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

Json ci_json(const RateCi& ci) {
  Json j{{"rate", ci.rate},   {"successes", ci.successes}, {"n", ci.n},
         {"lower", ci.lower}, {"upper", ci.upper},         {"half_width", ci.half_width}};
  if (!ci.note.empty()) j["note"] = ci.note;
  return j;
}

Json aggregate_json(const AggregateReport& report) {
  std::ostringstream s;
  write_report_json(s, report);
  return Json::parse(s.str());
}

std::vector<double> default_frame_times(const ExperimentSpec& spec, double last_t) {
  if (!spec.frame_times.empty()) return spec.frame_times;
  if (is_grid_planner(spec.planner)) {
    std::vector<double> out;
    for (int f = 0; f < 4; ++f) out.push_back(std::round(last_t * f / 3.0));
    return out;
  }
  return {0.0, 25.0, 45.0};
}

ConfidenceLadder rrt_ladder(const RrtConfig& rrt) {
  std::vector<double> levels = rrt.ladder;
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  return {levels, levels.back()};
}

void add_coverage_curves(AggregateReport& report, const CalibrationSet& test,
                         const QuantileTable& table) {
  if (test.n_episodes() < 100) return;
  for (double c : table.levels()) {
    report.coverage_curves.push_back({"c=" + fmt_double(c), coverage_curve(test, table, c)});
  }
}

void write_coverage_csv(std::ostream& out, const AggregateReport& report) {
  out << "curve,t,threshold,coverage,lower,upper\n";
  for (const NamedCurve& c : report.coverage_curves) {
    for (const CoveragePoint& p : c.points) {
      out << c.name << ',' << p.t << ',' << fmt_double(p.threshold) << ','
          << fmt_double(p.coverage.rate) << ',' << fmt_double(p.coverage.lower) << ','
          << fmt_double(p.coverage.upper) << '\n';
    }
  }
}

void write_calibration_artifacts(const fs::path& dir, const ExperimentSpec& spec,
                                 const Calibrated& ctx) {
  write_file(dir, "spec_resolved.json",
             [&](std::ostream& o) { o << experiment_to_json(spec).dump(2) << '\n'; });
  write_file(dir, "quantile_table.csv", [&](std::ostream& o) { write_quantile_table_csv(o, ctx.table); });
  write_file(dir, "calibration_scores.csv", [&](std::ostream& o) { write_scores_csv(o, ctx.cal); });
  write_file(dir, "truth_obstacles.csv", [&](std::ostream& o) { write_trajectories_csv(o, ctx.truth); });
}

// frame,t,kind,x,y,radius rows for the grid planners.
void write_grid_frames(std::ostream& out, const ExperimentSpec& spec, const Calibrated& ctx,
                       const GridTrial& trial) {
  out << "frame,t,kind,x,y,radius\n";
  const Workspace& ws = spec.scenario.workspace;
  const double dt = spec.scenario.dt;
  const int last = trial.trajectory ? trial.trajectory->total_time : ctx.steps - 1;
  const auto times = default_frame_times(spec, last * dt);
  for (std::size_t f = 0; f < times.size(); ++f) {
    int k = std::clamp(static_cast<int>(std::floor(times[f] / dt + 1e-9)), 0, ctx.steps - 1);
    auto row = [&](const char* kind, Vec2 p, double r) {
      out << f << ',' << fmt_double(k * dt) << ',' << kind << ',' << fmt_double(p.x) << ','
          << fmt_double(p.y) << ',' << fmt_double(r) << '\n';
    };
    for (Cell c : ws.static_blocked_cells) row("blocked", ws.center(c), 0.5 * ws.grid_resolution);
    if (trial.trajectory) {
      const auto& wps = trial.trajectory->waypoints;
      for (const Waypoint& w : wps) row("path", ws.center(w.cell), 0.0);
      const Waypoint& here = wps[static_cast<std::size_t>(std::min<int>(k, static_cast<int>(wps.size()) - 1))];
      row("robot", ws.center(here.cell), spec.grid.robot_radius);
    }
    const double q = ctx.table.lookup(ctx.ladder[0], static_cast<std::size_t>(k));
    for (int i = 0; i < trial.prediction.obstacles(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      row("predicted", trial.prediction.at[static_cast<std::size_t>(k)][ui], q + trial.prediction.radii[ui]);
      row("truth", trial.truth.at[static_cast<std::size_t>(k)][ui], trial.truth.radii[ui]);
    }
  }
}

void write_rrt_frames(std::ostream& out, const ExperimentSpec& spec, const Calibrated& ctx,
                      const RunLog& log) {
  out << "frame,t,kind,x,y,radius\n";
  if (log.steps.empty()) return;
  const auto times = default_frame_times(spec, log.steps.back().t);
  // Requested times past the end of the run clamp to the last step; emit it once.
  std::size_t f = 0;
  std::size_t prev = log.steps.size();
  for (double when : times) {
    std::size_t s = 0;
    while (s + 1 < log.steps.size() && log.steps[s + 1].t <= when + 1e-9) ++s;
    if (s == prev) continue;
    prev = s;
    const RunStep& step = log.steps[s];
    auto row = [&](const char* kind, Vec2 p, double r) {
      out << f << ',' << fmt_double(step.t) << ',' << kind << ',' << fmt_double(p.x) << ','
          << fmt_double(p.y) << ',' << fmt_double(r) << '\n';
    };
    Vec2 here = spec.receding.start;
    row("trail", here, 0.0);
    for (std::size_t k = 0; k < s; ++k) {
      here = log.steps[k].position;
      row("trail", here, 0.0);
    }
    for (Vec2 p : step.path_positions) row("plan", p, 0.0);
    row("robot", here, spec.receding.rrt.robot_radius);
    for (std::size_t i = 0; i < step.predicted_obstacles.size(); ++i) {
      const double r = ctx.truth[i].radius();
      row("predicted", step.predicted_obstacles[i], step.region_radius + r);
      row("truth", ctx.truth[i].position_at(step.t), r);
    }
    ++f;
  }
}

void write_rrt_trajectory(std::ostream& out, const RunLog& log) {
  out << "t,x,y,c_next,lambda,collided,stalled\n";
  for (const RunStep& s : log.steps) {
    out << fmt_double(s.t) << ',' << fmt_double(s.position.x) << ',' << fmt_double(s.position.y)
        << ',' << fmt_double(s.c_next) << ',' << fmt_double(s.lambda) << ',' << s.collided << ','
        << s.stalled << '\n';
  }
}

void write_confidence_evolution(std::ostream& out, const std::vector<const RunLog*>& logs) {
  out << "mode,cycle,t,avg_path_confidence\n";
  for (const RunLog* log : logs) {
    int cycle = 0;
    for (const RunStep& s : log->steps) {
      if (s.stalled) continue;
      out << to_string(log->mode) << ',' << cycle++ << ',' << fmt_double(s.t) << ','
          << fmt_double(s.avg_path_confidence) << '\n';
    }
  }
}

Json base_summary(const ExperimentSpec& spec, const Calibrated& ctx) {
  return {{"planner", to_string(spec.planner)},
          {"seed", spec.seed},
          {"calibration_episodes", spec.calibration_episodes},
          {"test_trials", spec.test_trials},
          {"horizon_steps", ctx.steps},
          {"rank_clipped", ctx.table.any_rank_clipped()}};
}

void write_report_files(const fs::path& dir, const ExperimentResult& res) {
  write_file(dir, "report.json", [&](std::ostream& o) { o << res.summary.dump(2) << '\n'; });
  write_file(dir, "report.txt", [&](std::ostream& o) {
    o << std::left;
    o << "planner             " << res.summary["planner"].get<std::string>() << '\n';
    write_report_text(o, res.report);
    o << "infeasible_trials   " << res.infeasible_trials << '\n';
    for (const auto& [reason, n] : res.infeasible_reasons) o << "  " << n << " x " << reason << '\n';
    if (res.summary.contains("first_node_dominance")) {
      o << "first_node_dominance " << (res.first_node_dominance ? "holds" : "VIOLATED") << '\n';
    }
    if (res.summary["rank_clipped"].get<bool>()) {
      o << "warning: some conformal ranks were clipped to n; add calibration episodes\n";
    }
  });
}

ExperimentResult run_grid_experiment(const ExperimentSpec& spec, const Calibrated& ctx,
                                     const fs::path& dir, int jobs) {
  std::vector<GridTrial> trials(static_cast<std::size_t>(spec.test_trials));
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    trials[i] = run_grid_trial(spec, ctx, static_cast<int>(i), i == 0);
  });

  ExperimentResult res;
  std::vector<TrialResult> results;
  std::size_t violations = 0;
  double steps_sum = 0.0;
  std::size_t feasible = 0;
  std::vector<double> scores;
  for (const GridTrial& t : trials) {
    results.push_back(t.result);
    scores.insert(scores.end(), t.scores.begin(), t.scores.end());
    if (t.feasible()) {
      ++feasible;
      steps_sum += static_cast<double>(t.path_steps);
      violations += t.violated ? 1 : 0;
    } else {
      ++res.infeasible_trials;
      ++res.infeasible_reasons[t.infeasible_reason];
    }
  }
  res.report = aggregate(results);
  add_coverage_curves(res.report,
                      CalibrationSet(trials.size(), static_cast<std::size_t>(ctx.steps), scores),
                      ctx.table);

  res.summary = base_summary(spec, ctx);
  res.summary["infeasible_trials"] = res.infeasible_trials;
  Json reasons = Json::object();
  for (const auto& [reason, n] : res.infeasible_reasons) reasons[reason] = n;
  res.summary["infeasible_reasons"] = reasons;
  if (feasible > 0) {
    res.summary["mean_path_steps"] = steps_sum / static_cast<double>(feasible);
    res.summary["violation_rate"] = ci_json(binomial_ci(violations, feasible));
  }
  res.summary["aggregate"] = aggregate_json(res.report);

  if (!dir.empty()) {
    write_calibration_artifacts(dir, spec, ctx);
    const GridTrial& first = trials.front();
    write_file(dir, "trials.csv", [&](std::ostream& o) {
      o << "trial_id,feasible,reached_goal,collided,first_collision_time,arrival_time,risk_bound,"
           "path_steps,violated,infeasible_reason\n";
      for (const GridTrial& t : trials) {
        const TrialResult& r = t.result;
        o << r.trial_id << ',' << t.feasible() << ',' << r.reached_goal << ',' << r.collided << ','
          << (r.collision_times.empty() ? "" : fmt_double(r.collision_times.front())) << ','
          << opt_str(r.arrival_time) << ',' << fmt_double(r.risk_bound) << ',' << t.path_steps
          << ',' << t.violated << ',' << t.infeasible_reason << '\n';
      }
    });
    write_file(dir, "trajectory_trial0.csv", [&](std::ostream& o) {
      if (first.trajectory) {
        write_trajectory_csv(o, *first.trajectory, spec.scenario.workspace);
      } else {
        o << "t,x,y,confidence\n";
      }
    });
    ConfidenceField field = build_confidence_field(ctx.table, ctx.ladder, first.prediction,
                                                   spec.scenario.workspace, spec.grid.robot_radius);
    write_file(dir, "intervals_trial0.csv",
               [&](std::ostream& o) { write_intervals_csv(o, IntervalTimeline(field), field); });
    write_file(dir, "frames.csv", [&](std::ostream& o) { write_grid_frames(o, spec, ctx, first); });
    write_file(dir, "coverage_curve.csv", [&](std::ostream& o) { write_coverage_csv(o, res.report); });
    write_report_files(dir, res);
  }
  return res;
}

ExperimentResult run_rrt_experiment(const ExperimentSpec& spec, const Calibrated& ctx,
                                    const fs::path& dir, int jobs) {
  const RrtMode mode = spec.planner == PlannerKind::acp_rrt ? RrtMode::acp : RrtMode::baseline;
  std::vector<RrtTrial> trials(static_cast<std::size_t>(spec.test_trials));
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    trials[i] = run_rrt_trial(spec, ctx, static_cast<int>(i), mode);
  });

  ExperimentResult res;
  std::vector<TrialResult> results;
  std::size_t rejected = 0;
  double stalls = 0.0;
  for (const RrtTrial& t : trials) {
    results.push_back(t.result);
    res.first_node_dominance = res.first_node_dominance && t.first_node_dominates;
    rejected += t.log.gate.rejected() ? 1 : 0;
    stalls += t.log.stalls;
    if (!t.result.reached_goal && !t.result.collided) {
      ++res.infeasible_trials;
      ++res.infeasible_reasons["goal not reached within the scenario horizon"];
    }
  }
  res.report = aggregate(results);

  // Coverage of the base table on episodes from the live predictor.
  if (spec.test_trials >= 100) {
    EpisodePlan plan{spec.test_trials, ctx.steps, ctx.max_anchor, mix_seed(spec.seed, kCoverageStream)};
    Episodes eps = make_episodes(spec.receding.predictor, ctx.track, spec.predictor.history_steps,
                                 spec.scenario.dt, plan, jobs);
    add_coverage_curves(res.report, collect_scores(eps.truths, eps.predictions), ctx.table);
  }

  res.summary = base_summary(spec, ctx);
  res.summary["infeasible_trials"] = res.infeasible_trials;
  res.summary["mean_stalls"] = stalls / static_cast<double>(trials.size());
  if (mode == RrtMode::acp) {
    res.summary["gate_rejection_rate"] = ci_json(binomial_ci(rejected, trials.size()));
    res.summary["first_node_dominance"] = res.first_node_dominance;
  }
  res.summary["aggregate"] = aggregate_json(res.report);

  if (!dir.empty()) {
    write_calibration_artifacts(dir, spec, ctx);
    const RunLog& log = trials.front().log;
    write_file(dir, "trials.csv", [&](std::ostream& o) {
      o << "trial_id,reached_goal,collided,first_collision_time,arrival_time,risk_bound,"
           "mean_miscoverage,stalls,gate_p_value,acp_activated,final_lambda\n";
      for (const RrtTrial& t : trials) {
        const TrialResult& r = t.result;
        const bool activated = std::any_of(t.log.steps.begin(), t.log.steps.end(),
                                           [](const RunStep& s) { return s.acp_active; });
        o << r.trial_id << ',' << r.reached_goal << ',' << r.collided << ','
          << (r.collision_times.empty() ? "" : fmt_double(r.collision_times.front())) << ','
          << opt_str(r.arrival_time) << ',' << fmt_double(r.risk_bound) << ','
          << opt_str(r.mean_miscoverage) << ',' << t.log.stalls << ','
          << fmt_double(t.log.gate.p_value) << ',' << activated << ','
          << fmt_double(t.log.acp.lambda) << '\n';
      }
    });
    write_file(dir, "trajectory_trial0.csv",
               [&](std::ostream& o) { write_rrt_trajectory(o, log); });
    write_file(dir, "run_log_trial0.jsonl", [&](std::ostream& o) { write_run_log_jsonl(o, log); });
    write_file(dir, "acp_trace_trial0.csv", [&](std::ostream& o) { write_acp_trace_csv(o, log.acp); });
    write_file(dir, "frames.csv", [&](std::ostream& o) { write_rrt_frames(o, spec, ctx, log); });

    // Trial 0 under the other mode too, so the confidence plot shows both.
    const RrtMode other = mode == RrtMode::acp ? RrtMode::baseline : RrtMode::acp;
    RrtTrial twin = run_rrt_trial(spec, ctx, 0, other);
    std::vector<const RunLog*> logs{&log, &twin.log};
    if (mode == RrtMode::baseline) std::swap(logs[0], logs[1]);
    write_file(dir, "confidence_evolution.csv",
               [&](std::ostream& o) { write_confidence_evolution(o, logs); });
    write_file(dir, "coverage_curve.csv", [&](std::ostream& o) { write_coverage_csv(o, res.report); });
    write_report_files(dir, res);
  }
  return res;
}

}  // namespace

fs::path resolve_output_dir(const ExperimentSpec& spec, const RunOptions& options) {
  fs::path dir = options.output_dir.empty() ? fs::path(spec.output_dir) : options.output_dir;
  if (dir.empty()) return dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

Calibrated calibrate_experiment(const ExperimentSpec& spec, int jobs) {
  Calibrated ctx;
  const int history = spec.predictor.history_steps;
  const double dt = spec.scenario.dt;
  ctx.track = simulate_track(spec.scenario, history);
  ctx.truth = simulate_truth(spec.scenario);
  if (is_grid_planner(spec.planner)) {
    ctx.steps = spec.grid.T_steps;
    ctx.max_anchor = 0;
    ctx.ladder = {spec.grid.ladder, spec.grid.c_min};
  } else {
    const auto& rrt = spec.receding.rrt;
    ctx.steps = static_cast<int>(std::ceil(rrt.horizon_H / dt - 1e-9)) + 1;
    ctx.max_anchor = spec.scenario.steps() - (ctx.steps - 1);
    if (ctx.max_anchor < 0) throw ConfigError("experiment.rrt.horizon", "longer than the scenario horizon");
    ctx.ladder = rrt_ladder(rrt);
  }
  EpisodePlan plan{spec.calibration_episodes, ctx.steps, ctx.max_anchor,
                   mix_seed(spec.seed, kCalibrationStream)};
  ctx.cal = calibrate(spec.predictor.predictor, ctx.track, history, dt, plan, jobs);
  ctx.table = build_quantile_table(ctx.cal, ctx.ladder);
  return ctx;
}

GridTrial run_grid_trial(const ExperimentSpec& spec, const Calibrated& ctx, int trial,
                         bool keep_forecasts) {
  const GridConfig& g = spec.grid;
  const Workspace& ws = spec.scenario.workspace;
  const double dt = spec.scenario.dt;
  const int history = spec.predictor.history_steps;
  const Predictor live = spec.live_predictor.value_or(spec.predictor.predictor);
  const std::uint64_t seed = mix_seed(mix_seed(spec.seed, kTrialStream), static_cast<std::uint64_t>(trial));

  GridTrial out;
  Forecast pred = predicted_forecast(live, ctx.track, history, 0, ctx.steps, dt, seed);
  Forecast truth = truth_forecast(ctx.track, history, 0, ctx.steps, dt);
  for (int t = 0; t < ctx.steps; ++t) {
    double r = 0.0;
    for (int i = 0; i < pred.obstacles(); ++i) {
      const auto ut = static_cast<std::size_t>(t);
      const auto ui = static_cast<std::size_t>(i);
      r = std::max(r, distance(pred.at[ut][ui], truth.at[ut][ui]));
    }
    out.scores.push_back(r);
  }

  ConfidenceField field = build_confidence_field(ctx.table, ctx.ladder, pred, ws, g.robot_radius);
  PlanQuery q;
  q.start = g.start;
  q.goal = g.goal;
  q.gamma = g.gamma;
  q.c_min = g.c_min;
  q.T_steps = ctx.steps;
  q.connectivity = g.connectivity;
  q.allow_wait = g.allow_wait;
  PlanResult plan = spec.planner == PlannerKind::cp_sipp
                        ? plan_sipp(q, IntervalTimeline(field), field)
                        : plan_spacetime(q, field);

  out.result.trial_id = trial;
  if (plan.feasible()) {
    out.trajectory = std::move(plan.trajectory);
    out.result = evaluate_trajectory(*out.trajectory, ws, ctx.truth, g.robot_radius, dt, 0.0, trial);
    out.path_steps = out.trajectory->waypoints.size();
    std::size_t misses = 0;
    for (const Waypoint& w : out.trajectory->waypoints) {
      const auto t = static_cast<std::size_t>(w.t);
      if (out.scores[t] > ctx.table.lookup(w.confidence, t)) ++misses;
    }
    out.violated = misses > 0;
    out.result.mean_miscoverage = static_cast<double>(misses) / static_cast<double>(out.path_steps);
  } else {
    out.infeasible_reason = plan.infeasible_reason;
  }
  if (keep_forecasts) {
    out.prediction = std::move(pred);
    out.truth = std::move(truth);
  }
  return out;
}

RrtTrial run_rrt_trial(const ExperimentSpec& spec, const Calibrated& ctx, int trial, RrtMode mode) {
  RecedingConfig cfg = spec.receding;
  cfg.mode = mode;
  cfg.seed = mix_seed(mix_seed(spec.seed, kTrialStream), static_cast<std::uint64_t>(trial));
  cfg.gate.rng_seed = mix_seed(cfg.seed, 0x6a7e);
  cfg.history_steps = spec.predictor.history_steps;

  RrtTrial out;
  out.log = receding_horizon_run(spec.scenario, ctx.track, ctx.table, ctx.cal, cfg);
  TrialResult& r = out.result;
  r.trial_id = trial;
  r.collided = out.log.collided;
  r.collision_times = out.log.collision_times;
  r.reached_goal = out.log.reached_goal;
  r.arrival_time = out.log.arrival_time;
  for (const RunStep& s : out.log.steps) {
    if (!s.stalled) r.risk_bound += 1.0 - s.c_next;
    for (std::size_t k = 1; k < s.path_confidences.size(); ++k) {
      if (s.path_confidences[k] > s.path_confidences.front() + 1e-12) out.first_node_dominates = false;
    }
  }
  if (mode == RrtMode::acp && !out.log.acp.history.empty()) {
    double sum = 0.0;
    for (const AcpRecord& rec : out.log.acp.history) sum += rec.e;
    r.mean_miscoverage = sum / static_cast<double>(out.log.acp.history.size());
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  const fs::path dir = resolve_output_dir(spec, options);
  Calibrated ctx = calibrate_experiment(spec, options.jobs);
  ExperimentResult res = is_grid_planner(spec.planner)
                             ? run_grid_experiment(spec, ctx, dir, options.jobs)
                             : run_rrt_experiment(spec, ctx, dir, options.jobs);
  res.output_dir = dir;
  return res;
}

Calibrated run_calibration(const ExperimentSpec& spec, const RunOptions& options) {
  const fs::path dir = resolve_output_dir(spec, options);
  Calibrated ctx = calibrate_experiment(spec, options.jobs);
  if (!dir.empty()) write_calibration_artifacts(dir, spec, ctx);
  return ctx;
}

bool run_single_plan(const ExperimentSpec& spec, const RunOptions& options) {
  const fs::path dir = resolve_output_dir(spec, options);
  Calibrated ctx = calibrate_experiment(spec, options.jobs);
  if (!dir.empty()) write_calibration_artifacts(dir, spec, ctx);
  if (is_grid_planner(spec.planner)) {
    GridTrial t = run_grid_trial(spec, ctx, 0, true);
    if (!dir.empty()) {
      ConfidenceField field = build_confidence_field(ctx.table, ctx.ladder, t.prediction,
                                                     spec.scenario.workspace, spec.grid.robot_radius);
      write_file(dir, "trajectory_trial0.csv", [&](std::ostream& o) {
        if (t.trajectory) {
          write_trajectory_csv(o, *t.trajectory, spec.scenario.workspace);
        } else {
          o << "t,x,y,confidence\n";
        }
      });
      write_file(dir, "intervals_trial0.csv",
                 [&](std::ostream& o) { write_intervals_csv(o, IntervalTimeline(field), field); });
      write_file(dir, "frames.csv", [&](std::ostream& o) { write_grid_frames(o, spec, ctx, t); });
    }
    return t.feasible();
  }
  const RrtMode mode = spec.planner == PlannerKind::acp_rrt ? RrtMode::acp : RrtMode::baseline;
  RrtTrial t = run_rrt_trial(spec, ctx, 0, mode);
  if (!dir.empty()) {
    write_file(dir, "trajectory_trial0.csv",
               [&](std::ostream& o) { write_rrt_trajectory(o, t.log); });
    write_file(dir, "run_log_trial0.jsonl", [&](std::ostream& o) { write_run_log_jsonl(o, t.log); });
    write_file(dir, "acp_trace_trial0.csv", [&](std::ostream& o) { write_acp_trace_csv(o, t.log.acp); });
    write_file(dir, "frames.csv", [&](std::ostream& o) { write_rrt_frames(o, spec, ctx, t.log); });
  }
  return t.result.reached_goal || t.result.collided;
}

}  // namespace confplan::harness
