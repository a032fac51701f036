// confplan: command-line harness for calibration, planning, experiments,
// parameter sweeps, the acceptance suite and plotting.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "confplan/format.hpp"
#include "confplan/harness/config.hpp"
#include "confplan/harness/experiment.hpp"
#include "confplan/harness/plots.hpp"
#include "confplan/harness/verify.hpp"

#ifndef CONFPLAN_SCENARIO_DIR
#define CONFPLAN_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace confplan;
using namespace confplan::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

void report_error(const std::string& kind, const std::string& field, const std::string& message) {
  Json j{{"error", kind}, {"field", field}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

struct Assignment {
  std::string path;
  std::vector<Json> values;
};

Json parse_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;
  }
}

// "a.b=1,2,3" -> {a.b, [1, 2, 3]}. Values are JSON when they parse as JSON.
Assignment parse_assignment(const std::string& arg) {
  auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(arg, "expected field.path=value[,value...]");
  Assignment a;
  a.path = arg.substr(0, eq);
  std::string rest = arg.substr(eq + 1);
  if (!rest.empty() && rest.front() == '[') {
    a.values.push_back(parse_value(rest));
    return a;
  }
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) a.values.push_back(parse_value(item));
  if (a.values.empty()) throw ConfigError(a.path, "no value given");
  return a;
}

ExperimentSpec load_with_overrides(const fs::path& file, const std::vector<std::pair<std::string, Json>>& sets) {
  Json j = read_json_file(file, "experiment");
  for (const auto& [path, value] : sets) set_json_path(j, path, value);
  return experiment_from_json(j, file.parent_path());
}

fs::path default_output(const fs::path& spec_file) {
  if (const char* env = std::getenv("CONFPLAN_OUTPUT_DIR"); env && *env) {
    return fs::path(env) / spec_file.stem();
  }
  return fs::path("confplan_out") / spec_file.stem();
}

struct Common {
  std::string spec;
  std::string out;
  int jobs = 1;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool with_set) {
  cmd->add_option("spec", c.spec, "Experiment file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", c.out,
                  "Output directory (default: $CONFPLAN_OUTPUT_DIR/<spec> or confplan_out/<spec>)");
  cmd->add_option("-j,--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  if (with_set) {
    cmd->add_option("--set", c.sets, "Override a field, e.g. --set grid.c_min=0.9");
  }
}

std::vector<std::pair<std::string, Json>> single_sets(const std::vector<std::string>& args) {
  std::vector<std::pair<std::string, Json>> out;
  for (const auto& s : args) {
    Assignment a = parse_assignment(s);
    if (a.values.size() != 1) throw ConfigError(a.path, "--set takes one value here; use sweep for lists");
    out.emplace_back(a.path, a.values.front());
  }
  return out;
}

RunOptions options_for(const Common& c) {
  RunOptions o;
  o.jobs = c.jobs;
  o.output_dir = c.out.empty() ? default_output(c.spec) : fs::path(c.out);
  return o;
}

void print_summary(const ExperimentResult& res) {
  const AggregateReport& r = res.report;
  std::cout << "trials " << r.n_trials << "  collision_rate " << fmt_double(r.collision.rate)
            << "  goal_rate " << fmt_double(r.goal.rate) << "  mean_risk_bound "
            << fmt_double(r.mean_risk_bound) << "  infeasible " << res.infeasible_trials << '\n';
  if (!res.output_dir.empty()) std::cout << "artifacts in " << res.output_dir.string() << '\n';
}

int cmd_run(const Common& c) {
  ExperimentSpec spec = load_with_overrides(c.spec, single_sets(c.sets));
  ExperimentResult res = run_experiment(spec, options_for(c));
  print_summary(res);
  return res.infeasible_trials > 0 ? kExitInfeasible : kExitOk;
}

int cmd_calibrate(const Common& c) {
  ExperimentSpec spec = load_with_overrides(c.spec, single_sets(c.sets));
  RunOptions o = options_for(c);
  Calibrated ctx = run_calibration(spec, o);
  std::cout << "calibrated " << ctx.cal.n_episodes() << " episodes x " << ctx.cal.horizon_steps()
            << " steps; tables in " << o.output_dir.string() << '\n';
  if (ctx.table.any_rank_clipped()) {
    std::cout << "warning: conformal rank clipped to n; use more calibration episodes\n";
  }
  return kExitOk;
}

int cmd_plan(const Common& c) {
  ExperimentSpec spec = load_with_overrides(c.spec, single_sets(c.sets));
  RunOptions o = options_for(c);
  const bool ok = run_single_plan(spec, o);
  std::cout << (ok ? "planned" : "infeasible") << "; artifacts in " << o.output_dir.string() << '\n';
  return ok ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const Common& c) {
  if (c.sets.empty()) throw ConfigError("--set", "sweep needs at least one --set field=v1,v2,...");
  std::vector<Assignment> axes;
  for (const auto& s : c.sets) axes.push_back(parse_assignment(s));
  const Json base = read_json_file(c.spec, "experiment");
  const fs::path root = c.out.empty() ? default_output(c.spec) : fs::path(c.out);
  fs::create_directories(root);

  std::size_t combos = 1;
  for (const auto& a : axes) combos *= a.values.size();
  std::ofstream summary(root / "sweep_summary.csv", std::ios::binary);
  summary << "run";
  for (const auto& a : axes) summary << ',' << a.path;
  summary << ",collision_rate,goal_rate,mean_arrival_time,mean_risk_bound,infeasible_trials\n";

  bool any_infeasible = false;
  for (std::size_t k = 0; k < combos; ++k) {
    Json j = base;
    std::size_t rest = k;
    std::vector<std::string> labels;
    for (const auto& a : axes) {
      const Json& v = a.values[rest % a.values.size()];
      rest /= a.values.size();
      set_json_path(j, a.path, v);
      labels.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    ExperimentSpec spec = experiment_from_json(j, fs::path(c.spec).parent_path());
    char name[32];
    std::snprintf(name, sizeof(name), "run_%03zu", k);
    RunOptions o;
    o.jobs = c.jobs;
    o.output_dir = root / name;
    ExperimentResult res = run_experiment(spec, o);
    any_infeasible = any_infeasible || res.infeasible_trials > 0;
    summary << name;
    for (const auto& l : labels) summary << ',' << l;
    const AggregateReport& r = res.report;
    summary << ',' << fmt_double(r.collision.rate) << ',' << fmt_double(r.goal.rate) << ','
            << (r.mean_arrival_time ? fmt_double(*r.mean_arrival_time) : "") << ','
            << fmt_double(r.mean_risk_bound) << ',' << res.infeasible_trials << '\n';
    std::cout << name << ": ";
    print_summary(res);
  }
  std::cout << "sweep summary in " << (root / "sweep_summary.csv").string() << '\n';
  return any_infeasible ? kExitInfeasible : kExitOk;
}

int cmd_verify(const VerifyOptions& opt, const std::string& out) {
  std::vector<CriterionResult> results = run_verify(opt, &std::cout);
  bool all = true;
  for (const auto& r : results) all = all && r.passed;
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "verify_report.json", std::ios::binary);
    f << verify_report_json(results);
    std::cout << "report in " << (fs::path(out) / "verify_report.json").string() << '\n';
  }
  return all ? kExitOk : kExitFailure;
}

int cmd_plot(const std::string& kind, const std::string& data, const std::string& run_dir,
             const std::string& out) {
  std::vector<PlotKind> kinds;
  if (kind == "all") {
    kinds = {PlotKind::trajectory_frames, PlotKind::confidence_evolution, PlotKind::coverage_curve,
             PlotKind::lambda_trace, PlotKind::quantile_table_heatmap};
  } else {
    kinds.push_back(plot_kind_from_string(kind));
  }
  if (kinds.size() > 1 && run_dir.empty()) throw PlotError("plot all needs --run-dir");
  for (PlotKind k : kinds) {
    PlotSpec spec;
    spec.kind = k;
    spec.data_path = !data.empty() ? fs::path(data) : fs::path(run_dir) / default_data_file(k);
    if (kinds.size() > 1 && !fs::exists(spec.data_path)) continue;
    if (!out.empty() && kinds.size() == 1) {
      spec.output_path = out;
    } else {
      const fs::path dir = out.empty() ? spec.data_path.parent_path() : fs::path(out);
      fs::create_directories(dir);
      spec.output_path = dir / (to_string(k) + ".svg");
    }
    emit_plot(spec);
    std::cout << "wrote " << spec.output_path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal-prediction motion planning harness"};
  app.require_subcommand(1);

  Common run_opts;
  Common cal_opts;
  Common plan_opts;
  Common sweep_opts;
  auto* run = app.add_subcommand("run", "Calibrate, run every test trial, aggregate and write artifacts");
  add_common(run, run_opts, true);
  auto* cal = app.add_subcommand("calibrate", "Write the calibration scores and quantile table");
  add_common(cal, cal_opts, true);
  auto* plan = app.add_subcommand("plan", "Plan and replay trial 0 only");
  add_common(plan, plan_opts, true);
  auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of --set field=v1,v2 lists");
  add_common(sweep, sweep_opts, true);

  VerifyOptions vopt;
  vopt.scenario_dir = CONFPLAN_SCENARIO_DIR;
  std::string vdir = vopt.scenario_dir.string();
  std::string vout;
  auto* verify = app.add_subcommand("verify", "Run acceptance criteria 1-8 and print PASS/FAIL lines");
  verify->add_option("--seed", vopt.seed, "Master seed");
  verify->add_option("-j,--jobs", vopt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  verify->add_option("--scenarios", vdir, "Directory with the named acceptance specs");
  verify->add_option("--only", vopt.only, "Criterion ids to run (default: all)")->delimiter(',');
  verify->add_option("-o,--output", vout, "Directory for verify_report.json");

  std::string pkind;
  std::string pdata;
  std::string prun;
  std::string pout;
  auto* plot = app.add_subcommand("plot", "Render an SVG from harness CSV output");
  plot->add_option("kind", pkind,
                   "trajectory_frames, confidence_evolution, coverage_curve, lambda_trace, "
                   "quantile_table_heatmap or all")
      ->required();
  plot->add_option("--data", pdata, "Input CSV");
  plot->add_option("--run-dir", prun, "Run directory; the CSV is picked by plot kind");
  plot->add_option("-o,--output", pout, "Output SVG (or directory for 'all')");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*cal) return cmd_calibrate(cal_opts);
    if (*plan) return cmd_plan(plan_opts);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*verify) {
      vopt.scenario_dir = vdir;
      return cmd_verify(vopt, vout);
    }
    if (*plot) {
      if (pdata.empty() && prun.empty()) throw PlotError("plot needs --data or --run-dir");
      return cmd_plot(pkind, pdata, prun, pout);
    }
  } catch (const ConfigError& e) {
    report_error("config", e.path(), e.what());
    return kExitConfig;
  } catch (const PlotError& e) {
    report_error("plot", "", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error("runtime", "", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
