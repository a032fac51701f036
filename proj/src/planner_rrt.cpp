#include "confplan/planner_rrt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>
#include <ostream>
#include <stdexcept>

#include "confplan/rng.hpp"

namespace confplan {

void RrtConfig::validate() const {
  if (!(v_max > 0.0)) throw std::invalid_argument("rrt.v_max must be > 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("rrt.step_size must be > 0");
  if (!(horizon_H > 0.0)) throw std::invalid_argument("rrt.horizon must be > 0");
  if (!(c_start >= 0.0 && c_start <= 1.0 && c_end >= 0.0 && c_end <= 1.0)) {
    throw std::invalid_argument("rrt.c_start and rrt.c_end must lie in [0, 1]");
  }
  if (!(c_start >= c_end)) throw std::invalid_argument("rrt.c_start must be >= rrt.c_end");
  if (!(goal_bias >= 0.0 && goal_bias <= 1.0)) {
    throw std::invalid_argument("rrt.goal_bias must lie in [0, 1]");
  }
  if (max_iterations < 0) throw std::invalid_argument("rrt.max_iterations must be >= 0");
  if (!(goal.radius >= 0.0)) throw std::invalid_argument("rrt.goal radius must be >= 0");
}

double schedule_value(double t, const RrtConfig& cfg) {
  double s = std::clamp(t, 0.0, cfg.horizon_H);
  return cfg.c_end + (cfg.c_start - cfg.c_end) * (1.0 - s / cfg.horizon_H);
}

double confidence_schedule(double t, const RrtConfig& cfg) {
  double c = schedule_value(t, cfg);
  if (cfg.ladder.empty()) return c;
  double best = -1.0;
  double lowest = std::numeric_limits<double>::infinity();
  for (double level : cfg.ladder) {
    // Tolerate rounding so that c(0) = c_start lands on the c_start level.
    if (level <= c + 1e-12) best = std::max(best, level);
    lowest = std::min(lowest, level);
  }
  return best >= 0.0 ? best : lowest;
}

RadiusFn acp_radius_fn(const AcpState& acp, const QuantileTable& base, double dt) {
  const double lambda = acp.lambda;
  return [lambda, &base, dt](double t, double confidence) {
    auto step = static_cast<std::size_t>(std::max(0.0, std::ceil(t / dt - 1e-9)));
    return lambda * base.lookup(confidence, step);
  };
}

bool point_safe(Vec2 x, double t, const Forecast& predictions, const RadiusFn& radius,
                const RrtConfig& cfg, const Workspace& ws) {
  if (!ws.contains(x) || ws.is_blocked(ws.cell_at(x))) return false;
  const double r = radius(t, confidence_schedule(t, cfg));
  for (int i = 0; i < predictions.obstacles(); ++i) {
    double clearance = distance(x, predictions.position(t, i)) -
                       predictions.radii[static_cast<std::size_t>(i)] - cfg.robot_radius;
    if (!(clearance > r)) return false;
  }
  return true;
}

bool edge_safe(Vec2 x_from, double t_from, Vec2 x_to, double t_to, const Forecast& predictions,
               const RadiusFn& radius, const RrtConfig& cfg, const Workspace& ws) {
  if (cfg.node_only_check) return point_safe(x_to, t_to, predictions, radius, cfg, ws);
  const double len = distance(x_from, x_to);
  const double space_res = cfg.step_size / 4.0;
  const double time_res = cfg.step_size / (4.0 * cfg.v_max);
  int n = std::max({1, static_cast<int>(std::ceil(len / space_res - 1e-9)),
                    static_cast<int>(std::ceil((t_to - t_from) / time_res - 1e-9))});
  for (int k = 0; k <= n; ++k) {
    double f = static_cast<double>(k) / n;
    if (!point_safe(lerp(x_from, x_to, f), t_from + (t_to - t_from) * f, predictions, radius, cfg,
                    ws)) {
      return false;
    }
  }
  return true;
}

namespace {

std::vector<TreeNode> extract_path(const std::vector<TreeNode>& tree, std::size_t leaf) {
  std::vector<TreeNode> path;
  for (auto n = static_cast<std::ptrdiff_t>(leaf); n >= 0;
       n = tree[static_cast<std::size_t>(n)].parent) {
    path.push_back(tree[static_cast<std::size_t>(n)]);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

TreeResult grow_tree(const TreeNode& start, const RrtConfig& cfg, const Workspace& ws,
                     const Forecast& predictions, const RadiusFn& radius, bool check_start) {
  cfg.validate();
  TreeResult result;
  TreeNode root = start;
  root.parent = -1;
  result.tree.push_back(root);
  if (check_start && !point_safe(root.position, root.t, predictions, radius, cfg, ws)) {
    result.failure_reason = "start is not conformally safe";
    return result;
  }
  if (cfg.goal.contains(root.position)) {
    result.success = true;
    result.path = {root};
    return result;
  }

  Rng rng(cfg.rng_seed);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    result.iterations = it + 1;
    Vec2 sample = uniform01(rng) < cfg.goal_bias
                      ? cfg.goal.center
                      : Vec2{uniform01(rng) * ws.width, uniform01(rng) * ws.height};

    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < result.tree.size(); ++k) {
      double d = distance(result.tree[k].position, sample);
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    if (best <= 0.0) continue;
    const TreeNode& near = result.tree[nearest];
    Vec2 x_new = best > cfg.step_size ? near.position + (sample - near.position) * (cfg.step_size / best)
                                      : sample;
    double t_new = near.t + distance(x_new, near.position) / cfg.v_max;
    double c_new = confidence_schedule(t_new, cfg);

    if (!edge_safe(near.position, near.t, x_new, t_new, predictions, radius, cfg, ws)) continue;
    if (nearest == 0 && cfg.commit_duration > 0.0 && t_new < root.t + cfg.commit_duration &&
        !edge_safe(x_new, t_new, x_new, root.t + cfg.commit_duration, predictions, radius, cfg,
                   ws)) {
      continue;
    }
    result.tree.push_back({x_new, t_new, c_new, static_cast<std::ptrdiff_t>(nearest)});
    if (cfg.goal.contains(x_new)) {
      result.success = true;
      result.path = extract_path(result.tree, result.tree.size() - 1);
      return result;
    }
  }
  result.failure_reason = "no path to the goal within max_iterations";
  return result;
}

TreeResult grow_tree(const TreeNode& start, const RrtConfig& cfg, const Workspace& ws,
                     const Forecast& predictions, const AcpState& acp,
                     const QuantileTable& base_quantiles) {
  return grow_tree(start, cfg, ws, predictions,
                   acp_radius_fn(acp, base_quantiles, predictions.dt));
}

double average_path_confidence(const std::vector<TreeNode>& path) {
  if (path.empty()) throw std::invalid_argument("average_path_confidence of an empty path");
  double sum = 0.0;
  for (const TreeNode& n : path) sum += n.confidence;
  return sum / static_cast<double>(path.size());
}

std::string to_string(RrtMode m) { return m == RrtMode::acp ? "acp_rrt" : "rrt_baseline"; }

RunLog receding_horizon_run(const Scenario& scenario, const std::vector<ObstacleTrajectory>& track,
                            const QuantileTable& table, const CalibrationSet& cal,
                            const RecedingConfig& cfg) {
  cfg.rrt.validate();
  cfg.acp.validate();
  cfg.predictor.validate();
  if (cfg.mode == RrtMode::acp) cfg.gate.validate();
  if (track.size() != scenario.obstacles.size()) {
    throw std::invalid_argument("track does not match the scenario's obstacles");
  }
  const double dt = scenario.dt;
  const int forecast_steps = static_cast<int>(std::ceil(cfg.rrt.horizon_H / dt - 1e-9));
  const int mission_steps = scenario.steps();
  const std::size_t n_obs = track.size();
  const auto hist0 = static_cast<std::size_t>(cfg.history_steps);
  for (const auto& o : track) {
    if (o.samples().size() != hist0 + static_cast<std::size_t>(mission_steps) + 1) {
      throw std::invalid_argument("track length does not match history_steps + horizon");
    }
  }
  const std::vector<double> cal_one_step =
      cal.column(std::min<std::size_t>(1, cal.horizon_steps() - 1));
  const double base_one_step = table.lookup(confidence_schedule(0.0, cfg.rrt), 1);

  RunLog log;
  log.mode = cfg.mode;
  log.acp = cfg.acp;
  bool acp_active = false;
  std::vector<double> new_scores;
  std::size_t last_gate_size = 0;
  int gate_tests = 0;
  Vec2 pos = cfg.start;
  std::optional<Forecast> prev;

  for (int k = 0; k < mission_steps; ++k) {
    const double t = k * dt;
    const std::size_t hist_len = hist0 + static_cast<std::size_t>(k) + 1;
    RunStep step;
    step.t = t;

    std::vector<Vec2> observed(n_obs);
    for (std::size_t i = 0; i < n_obs; ++i) observed[i] = track[i].samples()[hist_len - 1].position;

    if (prev) {
      double r = 0.0;
      for (std::size_t i = 0; i < n_obs; ++i) r = std::max(r, distance(prev->at[1][i], observed[i]));
      double ref = base_one_step;
      if (cfg.robot_distance_reference) ref = std::max(0.0, min_clearance(pos, prev->at[1], prev->radii, cfg.rrt.robot_radius));
      step.score = r;
      if (cfg.mode == RrtMode::acp) {
        new_scores.push_back(r);
        if (acp_active) {
          step.e = acp_update_inplace(log.acp, r, ref);
        } else {
          step.e = r > ref ? 1 : 0;
          log.acp.history.push_back({static_cast<int>(log.acp.history.size()), r, ref, 1.0, step.e});
        }
        const bool due = gate_tests == 0 ||
                         (cfg.gate_retest_every > 0 &&
                          new_scores.size() - last_gate_size >= static_cast<std::size_t>(cfg.gate_retest_every));
        if (!acp_active && due && new_scores.size() >= static_cast<std::size_t>(cfg.gate.warmup_W0)) {
          GateConfig gc = cfg.gate;
          gc.rng_seed = mix_seed(cfg.gate.rng_seed, static_cast<std::uint64_t>(gate_tests));
          log.gate = exchangeability_gate(cal_one_step, new_scores, gc);
          ++gate_tests;
          last_gate_size = new_scores.size();
          acp_active = log.gate.rejected();
        }
      }
    }
    step.acp_active = acp_active;
    const double lambda = acp_active ? log.acp.lambda : 1.0;
    step.lambda = lambda;

    Forecast fc;
    fc.dt = dt;
    for (const auto& o : track) fc.radii.push_back(o.radius());
    fc.at.assign(static_cast<std::size_t>(forecast_steps) + 1, std::vector<Vec2>(n_obs));
    fc.at[0] = observed;
    for (std::size_t i = 0; i < n_obs; ++i) {
      auto seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(k)), i);
      ObstacleTrajectory p = predict(cfg.predictor, track[i], hist_len, forecast_steps, dt, seed);
      // predict() prepends the anchor when forecasting a single step.
      std::size_t offset = p.samples().size() > static_cast<std::size_t>(forecast_steps) ? 1 : 0;
      for (int s = 1; s <= forecast_steps; ++s) {
        fc.at[static_cast<std::size_t>(s)][i] = p.samples()[static_cast<std::size_t>(s - 1) + offset].position;
      }
    }
    step.predicted_obstacles = fc.at[1];

    RadiusFn radius;
    if (cfg.mode == RrtMode::acp) {
      radius = [lambda, &table, dt](double tt, double c) {
        auto s = static_cast<std::size_t>(std::max(0.0, std::ceil(tt / dt - 1e-9)));
        return lambda * table.lookup(c, s);
      };
    } else {
      radius = [](double, double) { return 0.0; };
    }
    step.region_radius = radius(dt, confidence_schedule(dt, cfg.rrt));

    RrtConfig rc = cfg.rrt;
    rc.commit_duration = dt;
    TreeNode root{pos, 0.0, confidence_schedule(0.0, rc), -1};
    TreeResult tree;
    std::vector<double> confs;
    const int attempts = cfg.mode == RrtMode::baseline ? std::max(1, cfg.baseline_retries) : 1;
    bool committed = false;
    for (int a = 0; a < attempts && !committed; ++a) {
      rc.rng_seed = mix_seed(cfg.seed ^ 0xA5A5A5A5ULL, static_cast<std::uint64_t>(k * 16 + a));
      tree = grow_tree(root, rc, scenario.workspace, fc, radius, false);
      if (!tree.success || tree.path.size() < 2) break;
      confs.clear();
      for (std::size_t n = 1; n < tree.path.size(); ++n) {
        const TreeNode& node = tree.path[n];
        if (cfg.mode == RrtMode::acp) {
          confs.push_back(node.confidence);
        } else {
          // Post-hoc validation against the calibration field.
          std::vector<Vec2> centers(n_obs);
          for (std::size_t i = 0; i < n_obs; ++i) centers[i] = fc.position(node.t, static_cast<int>(i));
          double d = min_clearance(node.position, centers, fc.radii, cfg.rrt.robot_radius);
          auto s = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(node.t / dt - 1e-9)),
                                         cal.horizon_steps() - 1);
          confs.push_back(confidence_from_distance(cal, s, d));
        }
      }
      committed = cfg.mode == RrtMode::acp || confs.front() >= confidence_schedule(tree.path[1].t, rc);
    }

    Vec2 target = pos;
    double reach_time = 0.0;
    if (tree.success && tree.path.size() >= 2 && committed) {
      target = tree.path[1].position;
      reach_time = tree.path[1].t;
      step.c_next = confs.front();
      step.path_confidences = confs;
      double sum = 0.0;
      for (double c : confs) sum += c;
      step.avg_path_confidence = sum / static_cast<double>(confs.size());
      for (const auto& n : tree.path) step.path_positions.push_back(n.position);
    } else {
      step.stalled = true;
      ++log.stalls;
    }

    const int sub = std::max(1, cfg.collision_substeps);
    for (int s = 1; s <= sub; ++s) {
      double tau = dt * s / sub;
      Vec2 p = (reach_time > 0.0 && tau < reach_time) ? lerp(pos, target, tau / reach_time) : target;
      if (point_collides(p, t + tau, track, cfg.rrt.robot_radius)) {
        step.collided = true;
        log.collided = true;
        log.collision_times.push_back(t + tau);
        break;
      }
    }
    pos = target;
    step.position = pos;
    step.min_obstacle_dist = true_clearance(pos, t + dt, track, cfg.rrt.robot_radius);
    log.steps.push_back(std::move(step));
    prev = std::move(fc);

    if (log.collided) break;
    if (cfg.rrt.goal.contains(pos)) {
      log.reached_goal = true;
      log.arrival_time = t + reach_time;
      break;
    }
  }
  return log;
}

std::vector<double> average_confidence_series(const RunLog& log) {
  std::vector<double> out;
  for (const RunStep& s : log.steps) {
    if (!s.stalled) out.push_back(s.avg_path_confidence);
  }
  return out;
}

void write_run_log_jsonl(std::ostream& out, const RunLog& log) {
  for (const RunStep& s : log.steps) {
    nlohmann::ordered_json j;
    j["t"] = s.t;
    j["x"] = s.position.x;
    j["y"] = s.position.y;
    j["lambda"] = s.lambda;
    if (s.e >= 0) {
      j["e_t"] = s.e;
    } else {
      j["e_t"] = nullptr;
    }
    j["c_next"] = s.c_next;
    j["min_obstacle_dist"] = s.min_obstacle_dist;
    j["collided"] = s.collided;
    j["stalled"] = s.stalled;
    j["acp_active"] = s.acp_active;
    j["R_t"] = s.score;
    j["avg_path_confidence"] = s.avg_path_confidence;
    out << j.dump() << '\n';
  }
}

}  // namespace confplan
