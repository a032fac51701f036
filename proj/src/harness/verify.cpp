#include "confplan/harness/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "confplan/acp_online.hpp"
#include "confplan/format.hpp"
#include "confplan/harness/episodes.hpp"
#include "confplan/harness/experiment.hpp"
#include "confplan/harness/parallel.hpp"
#include "confplan/planner_spacetime.hpp"
#include "confplan/rng.hpp"

namespace confplan::harness {

namespace {

ExperimentSpec load_named(const VerifyOptions& opt, const std::string& file, int criterion) {
  ExperimentSpec spec = load_experiment(opt.scenario_dir / file);
  spec.seed = mix_seed(opt.seed, static_cast<std::uint64_t>(criterion));
  spec.receding.seed = spec.seed;
  spec.receding.gate.rng_seed = spec.seed;
  return spec;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

// Max of the norms of `k` isotropic 2-D Gaussian errors: the score of a
// k-obstacle scene whose forecasts are off by N(0, sigma^2 I).
double max_norm_score(Rng& rng, int k, double sigma) {
  double r = 0.0;
  for (int i = 0; i < k; ++i) {
    double x = gaussian(rng, sigma);
    double y = gaussian(rng, sigma);
    r = std::max(r, std::hypot(x, y));
  }
  return r;
}

constexpr int kStreamObstacles = 3;

double base_quantile(std::uint64_t seed, double alpha, std::size_t n) {
  Rng rng(seed);
  std::vector<double> cal(n);
  for (double& v : cal) v = max_norm_score(rng, kStreamObstacles, 1.0);
  std::sort(cal.begin(), cal.end());
  return cal[conformal_rank(n, 1.0 - alpha).k - 1];
}

struct ParityInstance {
  Workspace ws;
  Forecast prediction;
  ConfidenceLadder ladder{{0.95, 0.9, 0.8}, 0.8};
  QuantileTable table;
  Cell start;
  Cell goal;
  int T = 0;
  bool allow_wait = true;
};

// Random small grid world pushed through the real pipeline: simulated
// obstacles, a noisy predictor, a calibrated table and one forecast.
ParityInstance parity_instance(std::uint64_t seed) {
  Rng rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ParityInstance inst;
  const int side = uniform_int(3, 8);
  inst.T = uniform_int(side, 30);
  inst.allow_wait = uniform01(rng) < 0.7;

  Scenario sc;
  sc.workspace = {static_cast<double>(side), static_cast<double>(side), 1.0, {}};
  sc.horizon_T = inst.T - 1;
  sc.dt = 1.0;
  inst.start = {uniform_int(0, side - 1), uniform_int(0, side - 1)};
  inst.goal = {uniform_int(0, side - 1), uniform_int(0, side - 1)};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      Cell c{x, y};
      if (c != inst.start && c != inst.goal && uniform01(rng) < 0.1) {
        sc.workspace.static_blocked_cells.push_back(c);
      }
    }
  }
  const int n_obs = uniform_int(0, 3);
  for (int i = 0; i < n_obs; ++i) {
    auto point = [&] { return Vec2{uniform01(rng) * side, uniform01(rng) * side}; };
    WaypointMotion m;
    m.waypoints = {{0.0, point()}, {sc.horizon_T, point()}};
    sc.obstacles.push_back({i, m, uniform01(rng) < 0.5 ? 0.0 : 0.3});
  }
  inst.ws = sc.workspace;

  Predictor pred{PredictorKind::noisy_kinematic, 0.1, 2};
  const int history = 2;
  auto track = simulate_track(sc, history);
  EpisodePlan plan{100, inst.T, 0, mix_seed(seed, 1)};
  if (n_obs > 0) {
    inst.table = build_quantile_table(calibrate(pred, track, history, 1.0, plan), inst.ladder);
    inst.prediction = predicted_forecast(pred, track, history, 0, inst.T, 1.0, mix_seed(seed, 2));
  } else {
    inst.table = QuantileTable(inst.ladder.levels, static_cast<std::size_t>(inst.T),
                               std::vector<double>(inst.ladder.size() * static_cast<std::size_t>(inst.T), 0.0));
    inst.prediction.at.assign(static_cast<std::size_t>(inst.T), {});
  }
  return inst;
}

}  // namespace

CriterionResult verify_split_coverage(const VerifyOptions& opt) {
  CriterionResult r{1, "split conformal coverage", false, 0.0, 0.0, "", 0.0};
  ExperimentSpec spec = load_named(opt, "coverage.json", 1);
  const int history = spec.predictor.history_steps;
  const double dt = spec.scenario.dt;
  const int steps = spec.grid.T_steps;
  const auto track = simulate_track(spec.scenario, history);
  const int n_cal = 200;
  const int n_test = 2000;
  CalibrationSet cal = calibrate(spec.predictor.predictor, track, history, dt,
                                 {n_cal, steps, 0, mix_seed(spec.seed, 1)}, opt.jobs);
  CalibrationSet test = calibrate(spec.predictor.predictor, track, history, dt,
                                  {n_test, steps, 0, mix_seed(spec.seed, 2)}, opt.jobs);
  ConfidenceLadder ladder{{0.95, 0.9, 0.8}, 0.8};
  QuantileTable table = build_quantile_table(cal, ladder);

  // The coverage of a split-conformal threshold varies with both the
  // calibration draw and the test draw, so both sample sizes enter sigma.
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  int below_test_only = 0;
  for (double c : ladder.levels) {
    const double alpha = 1.0 - c;
    const double sigma = std::sqrt(alpha * (1.0 - alpha) * (1.0 / n_cal + 1.0 / n_test));
    const double sigma_test = std::sqrt(alpha * (1.0 - alpha) / n_test);
    const double bound = c - tolerance::kSigmas * sigma;
    for (const CoveragePoint& p : coverage_curve(test, table, c)) {
      if (p.t == 0) continue;  // the observation itself; R(0) = 0
      if (p.coverage.rate < c - tolerance::kSigmas * sigma_test) ++below_test_only;
      const double margin = p.coverage.rate - bound;
      if (margin < worst) {
        worst = margin;
        where = "alpha=" + num(alpha) + " t=" + std::to_string(p.t) + " coverage=" +
                num(p.coverage.rate) + " bound=" + num(bound);
      }
    }
  }
  r.measured = worst;
  r.threshold = 0.0;
  r.passed = worst >= 0.0;
  r.detail = "worst margin at " + where + " (" + std::to_string(steps - 1) +
             " steps x 3 levels); cells below a test-only 3-sigma band: " +
             std::to_string(below_test_only);
  return r;
}

CriterionResult verify_union_bound(const VerifyOptions& opt) {
  CriterionResult r{2, "union bound on trajectory violation", false, 0.0, 0.0, "", 0.0};
  ExperimentSpec spec = load_named(opt, "cp_sipp_corridor.json", 2);
  spec.test_trials = 2000;
  Calibrated ctx = calibrate_experiment(spec, opt.jobs);
  std::vector<GridTrial> trials(static_cast<std::size_t>(spec.test_trials));
  parallel_for(trials.size(), opt.jobs,
               [&](std::size_t i) { trials[i] = run_grid_trial(spec, ctx, static_cast<int>(i)); });

  std::size_t feasible = 0;
  std::size_t violated = 0;
  std::size_t collided = 0;
  double k_sum = 0.0;
  for (const GridTrial& t : trials) {
    if (!t.feasible()) continue;
    ++feasible;
    violated += t.violated ? 1 : 0;
    collided += t.result.collided ? 1 : 0;
    k_sum += static_cast<double>(t.path_steps);
  }
  if (feasible == 0) {
    r.detail = "no feasible plan in any trial";
    return r;
  }
  const double n = static_cast<double>(feasible);
  const double alpha = 1.0 - spec.grid.c_min;
  const double bound = std::min(1.0, k_sum / n * alpha);
  const double sigma = std::sqrt(std::max(bound * (1.0 - bound), 1e-12) / n);
  const double limit = bound + tolerance::kSigmas * sigma;
  const double violation_rate = static_cast<double>(violated) / n;
  const double collision_rate = static_cast<double>(collided) / n;
  r.measured = violation_rate;
  r.threshold = limit;
  r.passed = violation_rate <= limit && collision_rate <= limit;
  r.detail = "feasible=" + std::to_string(feasible) + "/" + std::to_string(trials.size()) +
             " mean_k=" + num(k_sum / n) + " violation_rate=" + num(violation_rate) +
             " collision_rate=" + num(collision_rate) + " k*alpha=" + num(bound);
  return r;
}

CriterionResult verify_sipp_parity(const VerifyOptions& opt) {
  CriterionResult r{3, "CP-SIPP arrival-time parity with space-time A*", false, 0.0, 0.0, "", 0.0};
  const int n = 200;
  std::vector<int> mismatch(n, 0);
  std::vector<int> feasible(n, 0);
  std::vector<std::string> notes(n);
  parallel_for(static_cast<std::size_t>(n), opt.jobs, [&](std::size_t i) {
    ParityInstance inst = parity_instance(mix_seed(mix_seed(opt.seed, 3), i));
    ConfidenceField field = build_confidence_field(inst.table, inst.ladder, inst.prediction, inst.ws);
    PlanQuery q;
    q.start = inst.start;
    q.goal = inst.goal;
    q.gamma = 0.0;
    q.c_min = inst.ladder.c_min;
    q.T_steps = inst.T;
    q.connectivity = Connectivity::four;
    q.allow_wait = inst.allow_wait;
    PlanResult a = plan_spacetime(q, field);
    PlanResult b = plan_sipp(q, IntervalTimeline(field), field);
    feasible[i] = a.feasible() ? 1 : 0;
    if (a.feasible() != b.feasible()) {
      mismatch[i] = 1;
      notes[i] = "verdicts differ";
    } else if (a.feasible() && a.trajectory->total_time != b.trajectory->total_time) {
      mismatch[i] = 1;
      notes[i] = "arrival " + std::to_string(a.trajectory->total_time) + " vs " +
                 std::to_string(b.trajectory->total_time);
    }
  });
  const int bad = std::accumulate(mismatch.begin(), mismatch.end(), 0);
  const int ok = std::accumulate(feasible.begin(), feasible.end(), 0);
  r.measured = bad;
  r.threshold = 0.0;
  r.passed = bad == 0;
  r.detail = std::to_string(n) + " instances, " + std::to_string(ok) + " feasible, " +
             std::to_string(n - ok) + " infeasible, " + std::to_string(bad) + " mismatches";
  for (int i = 0; i < n; ++i) {
    if (mismatch[i]) {
      r.detail += "; first mismatch at instance " + std::to_string(i) + ": " + notes[i];
      break;
    }
  }
  return r;
}

CriterionResult verify_acp_tracking(const VerifyOptions& opt) {
  CriterionResult r{4, "ACP long-run miscoverage tracking", false, 0.0, 0.0, "", 0.0};
  const double alpha = 0.1;
  const int seeds = 200;
  struct Setting {
    double kappa;
    int T;
  };
  const Setting settings[2] = {{0.05, 10000}, {0.025, 20000}};
  double band[2] = {0.0, 0.0};
  double worst[2] = {0.0, 0.0};
  double mean_dev[2] = {0.0, 0.0};
  for (int s = 0; s < 2; ++s) {
    std::vector<double> dev(seeds);
    parallel_for(static_cast<std::size_t>(seeds), opt.jobs, [&](std::size_t j) {
      const std::uint64_t seed = mix_seed(mix_seed(opt.seed, 4), j);
      const double ref = base_quantile(mix_seed(seed, 0), alpha, 200);
      AcpState st;
      st.kappa = settings[s].kappa;
      st.alpha = alpha;
      Rng rng(mix_seed(seed, 1));
      const int T = settings[s].T;
      long errors = 0;
      for (int t = 0; t < T; ++t) {
        const double sigma = t < T / 2 ? 1.0 : 2.0;
        const double score = max_norm_score(rng, kStreamObstacles, sigma);
        errors += acp_update_inplace(st, score, ref);
      }
      dev[j] = static_cast<double>(errors) / T - alpha;
    });
    double mean = 0.0;
    for (double d : dev) {
      mean += d;
      worst[s] = std::max(worst[s], std::abs(d));
    }
    mean /= seeds;
    double var = 0.0;
    for (double d : dev) var += (d - mean) * (d - mean);
    const double sd = std::sqrt(var / (seeds - 1));
    mean_dev[s] = mean;
    band[s] = std::abs(mean) + tolerance::kSigmas * sd;
  }
  r.measured = std::max(worst[0], worst[1]);
  r.threshold = tolerance::kTrackingBand;
  r.passed = worst[0] <= tolerance::kTrackingBand && worst[1] <= tolerance::kTrackingBand &&
             band[1] <= band[0];
  r.detail = "kappa=0.05,T=10000: max|mean(e)-alpha|=" + num(worst[0]) + " band=" +
             fmt_double(band[0]) + "; kappa=0.025,T=20000: max|mean(e)-alpha|=" + num(worst[1]) +
             " band=" + fmt_double(band[1]) + " (" + std::to_string(seeds) + " seeds, mean dev " +
             num(mean_dev[0]) + "/" + num(mean_dev[1]) + ")";
  return r;
}

CriterionResult verify_gate(const VerifyOptions& opt) {
  CriterionResult r{5, "exchangeability gate level and power", false, 0.0, 0.0, "", 0.0};
  const int trials = 500;
  GateConfig cfg;
  cfg.warmup_W0 = 50;
  cfg.block_len_B = 5;
  cfg.n_permutations_N = 199;
  cfg.alpha_gate = tolerance::kGateAlpha;
  std::vector<int> null_reject(trials, 0);
  std::vector<int> alt_reject(trials, 0);
  parallel_for(static_cast<std::size_t>(trials), opt.jobs, [&](std::size_t j) {
    const std::uint64_t seed = mix_seed(mix_seed(opt.seed, 5), j);
    Rng rng(seed);
    std::vector<double> cal(200);
    for (double& v : cal) v = max_norm_score(rng, kStreamObstacles, 1.0);
    std::vector<double> same(static_cast<std::size_t>(cfg.warmup_W0));
    std::vector<double> shifted(static_cast<std::size_t>(cfg.warmup_W0));
    for (double& v : same) v = max_norm_score(rng, kStreamObstacles, 1.0);
    for (double& v : shifted) v = max_norm_score(rng, kStreamObstacles, 2.0);
    GateConfig c = cfg;
    c.rng_seed = mix_seed(seed, 1);
    null_reject[j] = exchangeability_gate(cal, same, c).rejected() ? 1 : 0;
    c.rng_seed = mix_seed(seed, 2);
    alt_reject[j] = exchangeability_gate(cal, shifted, c).rejected() ? 1 : 0;
  });
  const double level = std::accumulate(null_reject.begin(), null_reject.end(), 0) / double(trials);
  const double power = std::accumulate(alt_reject.begin(), alt_reject.end(), 0) / double(trials);
  const double sigma = std::sqrt(tolerance::kGateAlpha * (1.0 - tolerance::kGateAlpha) / trials);
  const bool level_ok = std::abs(level - tolerance::kGateAlpha) <= tolerance::kSigmas * sigma;
  r.measured = power;
  r.threshold = tolerance::kGatePower;
  r.passed = level_ok && power >= tolerance::kGatePower;
  r.detail = "null rejection rate=" + num(level) + " (allowed " +
             num(tolerance::kGateAlpha - tolerance::kSigmas * sigma) + ".." +
             num(tolerance::kGateAlpha + tolerance::kSigmas * sigma) + "), power at doubled sigma=" +
             num(power) + " (W0=50, B=5, N=199, 200 calibration scores)";
  return r;
}

CriterionResult verify_acp_vs_baseline(const VerifyOptions& opt) {
  CriterionResult r{6, "ACP-RRT collision rate below the baseline", false, 0.0, 0.0, "", 0.0};
  ExperimentSpec spec = load_named(opt, "acp_rrt_three_obstacles.json", 6);
  const int n = 100;
  Calibrated ctx = calibrate_experiment(spec, opt.jobs);
  std::vector<RrtTrial> acp(n);
  std::vector<RrtTrial> base(n);
  parallel_for(static_cast<std::size_t>(2 * n), opt.jobs, [&](std::size_t k) {
    const int i = static_cast<int>(k / 2);
    if (k % 2 == 0) {
      acp[static_cast<std::size_t>(i)] = run_rrt_trial(spec, ctx, i, RrtMode::acp);
    } else {
      base[static_cast<std::size_t>(i)] = run_rrt_trial(spec, ctx, i, RrtMode::baseline);
    }
  });
  int acp_hits = 0;
  int base_hits = 0;
  int acp_goal = 0;
  int base_goal = 0;
  int activated = 0;
  bool dominance = true;
  for (int i = 0; i < n; ++i) {
    acp_hits += acp[static_cast<std::size_t>(i)].result.collided ? 1 : 0;
    base_hits += base[static_cast<std::size_t>(i)].result.collided ? 1 : 0;
    acp_goal += acp[static_cast<std::size_t>(i)].result.reached_goal ? 1 : 0;
    base_goal += base[static_cast<std::size_t>(i)].result.reached_goal ? 1 : 0;
    activated += acp[static_cast<std::size_t>(i)].log.gate.rejected() ? 1 : 0;
    dominance = dominance && acp[static_cast<std::size_t>(i)].first_node_dominates;
  }
  r.measured = acp_hits / double(n);
  r.threshold = base_hits / double(n);
  r.passed = acp_hits < base_hits && dominance;
  r.detail = "collisions acp=" + std::to_string(acp_hits) + "/" + std::to_string(n) +
             " baseline=" + std::to_string(base_hits) + "/" + std::to_string(n) +
             "; goals acp=" + std::to_string(acp_goal) + " baseline=" + std::to_string(base_goal) +
             "; gate rejected in " + std::to_string(activated) + " runs; first-node dominance " +
             (dominance ? "holds" : "violated");
  return r;
}

CriterionResult verify_identities(const VerifyOptions&) {
  CriterionResult r{7, "closed-form identities", false, 0.0, tolerance::kIdentity, "", 0.0};
  double err = 0.0;
  auto track = [&err](double a, double b) { err = std::max(err, std::abs(a - b)); };

  const double starts[] = {0.99, 0.95, 0.9};
  const double ends[] = {0.6, 0.5, 0.8};
  const double horizons[] = {1.0, 17.5, 50.0};
  for (double cs : starts) {
    for (double ce : ends) {
      for (double h : horizons) {
        RrtConfig cfg;
        cfg.c_start = cs;
        cfg.c_end = ce;
        cfg.horizon_H = h;
        track(confidence_schedule(0.0, cfg), cs);
        track(confidence_schedule(h, cfg), ce);
        cfg.ladder = {cs, ce};
        track(confidence_schedule(0.0, cfg), cs);
        track(confidence_schedule(h, cfg), ce);
      }
    }
  }

  bool pruned = !edge_weight(1.0, 0.0, 0.5).has_value();
  for (double w : {1.0, std::sqrt(2.0)}) {
    for (double c : {0.8, 0.9, 0.95, 1.0}) {
      for (double g : {0.0, 0.25, 0.5, 1.0}) {
        track(*edge_weight(w, c, g), (1.0 - g) * w - g * std::log(c));
      }
      track(*edge_weight(w, c, 0.0), w);
    }
  }

  for (double lambda : {0.5, 1.0, 3.0}) {
    for (double kappa : {0.01, 0.05, 0.2}) {
      for (double alpha : {0.05, 0.1, 0.2}) {
        AcpState s;
        s.lambda = lambda;
        s.kappa = kappa;
        s.alpha = alpha;
        track(acp_update(s, 1e9, 1.0).state.lambda, lambda * std::exp(kappa * (1.0 - alpha)));
        track(acp_update(s, 0.0, 1.0).state.lambda, lambda * std::exp(-kappa * alpha));
      }
    }
  }

  for (int n_perm : {19, 99, 199, 999}) {
    std::vector<double> cal(100);
    std::vector<double> fresh(50);
    std::iota(cal.begin(), cal.end(), 0.0);
    std::iota(fresh.begin(), fresh.end(), 1000.0);
    GateConfig cfg;
    cfg.n_permutations_N = n_perm;
    cfg.rng_seed = mix_seed(7, static_cast<std::uint64_t>(n_perm));
    track(exchangeability_gate(cal, fresh, cfg).p_value, 1.0 / (n_perm + 1));
  }

  r.measured = err;
  r.passed = err <= tolerance::kIdentity && pruned;
  r.detail = "schedule endpoints, edge weights, lambda updates and the permutation p-value floor; "
             "max abs error " + fmt_double(err) + (pruned ? "" : "; zero-confidence edge not pruned");
  return r;
}

std::string verify_report_json(const std::vector<CriterionResult>& results) {
  Json criteria = Json::array();
  for (const CriterionResult& c : results) {
    criteria.push_back({{"id", c.id},
                        {"name", c.name},
                        {"passed", c.passed},
                        {"measured", c.measured},
                        {"threshold", c.threshold},
                        {"detail", c.detail}});
  }
  Json j{{"criteria", criteria}};
  return j.dump(2) + "\n";
}

std::string pass_fail_line(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << "  measured="
    << fmt_double(r.measured) << " threshold=" << fmt_double(r.threshold) << "  " << r.detail;
  return s.str();
}

std::vector<CriterionResult> run_verify(const VerifyOptions& opt, std::ostream* progress) {
  using Fn = CriterionResult (*)(const VerifyOptions&);
  const Fn criteria[] = {verify_split_coverage, verify_union_bound, verify_sipp_parity,
                         verify_acp_tracking,   verify_gate,        verify_acp_vs_baseline,
                         verify_identities};
  auto selected = [&opt](int id) {
    return opt.only.empty() || std::find(opt.only.begin(), opt.only.end(), id) != opt.only.end();
  };
  // Criterion 8 on its own still needs criteria 1-7 to compare.
  const bool only_determinism = opt.only.size() == 1 && opt.only.front() == 8;
  auto run_all = [&](const VerifyOptions& o, std::ostream* out) {
    std::vector<CriterionResult> res;
    for (int id = 1; id <= 7; ++id) {
      if (!selected(id) && !only_determinism) continue;
      auto t0 = std::chrono::steady_clock::now();
      CriterionResult r = criteria[id - 1](o);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (out) *out << pass_fail_line(r) << "  (" << num(r.seconds) << " s)" << std::endl;
      res.push_back(std::move(r));
    }
    return res;
  };

  std::vector<CriterionResult> results = run_all(opt, progress);
  if (selected(8)) {
    auto t0 = std::chrono::steady_clock::now();
    VerifyOptions again = opt;
    again.jobs = opt.jobs == 1 ? 2 : 1;
    const std::string first = verify_report_json(results);
    const std::string second = verify_report_json(run_all(again, nullptr));
    CriterionResult r{8, "byte-identical verify reports", first == second, 0.0, 0.0, "", 0.0};
    std::size_t diff = 0;
    while (diff < std::min(first.size(), second.size()) && first[diff] == second[diff]) ++diff;
    r.measured = first == second ? 0.0 : 1.0;
    r.detail = "second pass with jobs=" + std::to_string(again.jobs) + " vs jobs=" +
               std::to_string(opt.jobs) + "; " + std::to_string(first.size()) + " bytes" +
               (first == second ? ", identical" : ", first difference at byte " + std::to_string(diff));
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) *progress << pass_fail_line(r) << "  (" << num(r.seconds) << " s)" << std::endl;
    if (only_determinism) results.clear();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace confplan::harness
