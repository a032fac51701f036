#include "confplan/env_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "confplan/format.hpp"
#include "confplan/rng.hpp"

namespace confplan {

namespace {

constexpr double kStepTolerance = 1e-9;

}  // namespace

void Workspace::validate() const {
  if (!(width > 0.0)) throw ScenarioError("workspace.width must be > 0");
  if (!(height > 0.0)) throw ScenarioError("workspace.height must be > 0");
  if (!(grid_resolution > 0.0)) throw ScenarioError("workspace.resolution must be > 0");
  for (const Cell& c : static_blocked_cells) {
    if (!in_bounds(c)) {
      throw ScenarioError("workspace.blocked cell (" + std::to_string(c.x) + "," +
                          std::to_string(c.y) + ") lies outside the workspace");
    }
  }
}

int Workspace::cols() const {
  return std::max(1, static_cast<int>(std::floor(width / grid_resolution + kStepTolerance)));
}

int Workspace::rows() const {
  return std::max(1, static_cast<int>(std::floor(height / grid_resolution + kStepTolerance)));
}

bool Workspace::is_blocked(Cell c) const {
  return std::binary_search(static_blocked_cells.begin(), static_blocked_cells.end(), c);
}

Vec2 Workspace::center(Cell c) const {
  return {(c.x + 0.5) * grid_resolution, (c.y + 0.5) * grid_resolution};
}

Cell Workspace::cell_at(Vec2 p) const {
  int cx = std::clamp(static_cast<int>(std::floor(p.x / grid_resolution)), 0, cols() - 1);
  int cy = std::clamp(static_cast<int>(std::floor(p.y / grid_resolution)), 0, rows() - 1);
  return {cx, cy};
}

ObstacleTrajectory::ObstacleTrajectory(int obstacle_id, std::vector<Sample> samples,
                                       double radius)
    : id_(obstacle_id), samples_(std::move(samples)), radius_(radius) {
  if (samples_.size() < 2) {
    throw std::invalid_argument("obstacle trajectory needs at least 2 samples");
  }
  for (std::size_t k = 1; k < samples_.size(); ++k) {
    if (!(samples_[k].t > samples_[k - 1].t)) {
      throw std::invalid_argument("obstacle trajectory sample times must be strictly increasing");
    }
  }
  if (!(radius_ >= 0.0)) throw std::invalid_argument("obstacle radius must be >= 0");
}

Vec2 ObstacleTrajectory::position_at(double t) const {
  if (t < t_begin() || t > t_end()) {
    throw std::out_of_range("time " + fmt_double(t) + " outside trajectory span [" +
                            fmt_double(t_begin()) + ", " + fmt_double(t_end()) + "]");
  }
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const Sample& s) { return v < s.t; });
  const Sample& prev = *(it - 1);
  if (prev.t == t || it == samples_.end()) return prev.position;
  double f = (t - prev.t) / (it->t - prev.t);
  return lerp(prev.position, it->position, f);
}

Vec2 motion_position(const MotionSpec& motion, double t) {
  struct Visitor {
    double t;
    Vec2 operator()(const ConstantVelocityMotion& m) const { return m.start + m.velocity * t; }
    Vec2 operator()(const WaypointMotion& m) const {
      const auto& w = m.waypoints;
      if (t <= w.front().t) return w.front().position;
      if (t >= w.back().t) return w.back().position;
      auto it = std::upper_bound(w.begin(), w.end(), t,
                                 [](double v, const Sample& s) { return v < s.t; });
      const Sample& prev = *(it - 1);
      return lerp(prev.position, it->position, (t - prev.t) / (it->t - prev.t));
    }
    Vec2 operator()(const SinusoidalMotion& m) const {
      double n = m.direction.norm();
      Vec2 unit = n > 0.0 ? m.direction * (1.0 / n) : Vec2{0.0, 0.0};
      double s = std::sin(2.0 * std::numbers::pi * t / m.period + m.phase);
      return m.center + m.velocity * t + unit * (m.amplitude * s);
    }
  };
  return std::visit(Visitor{t}, motion);
}

void Scenario::validate() const {
  workspace.validate();
  if (!(horizon_T > 0.0)) throw ScenarioError("horizon must be > 0");
  if (!(dt > 0.0)) throw ScenarioError("dt must be > 0");
  double ratio = horizon_T / dt;
  if (std::abs(ratio - std::round(ratio)) > kStepTolerance * std::max(1.0, ratio)) {
    throw ScenarioError("dt must divide horizon");
  }
  for (const ObstacleSpec& o : obstacles) {
    if (!(o.radius >= 0.0)) {
      throw ScenarioError("obstacle " + std::to_string(o.id) + ": radius must be >= 0");
    }
    if (const auto* w = std::get_if<WaypointMotion>(&o.motion)) {
      if (w->waypoints.empty()) {
        throw ScenarioError("obstacle " + std::to_string(o.id) + ": waypoint list is empty");
      }
      for (std::size_t k = 1; k < w->waypoints.size(); ++k) {
        if (!(w->waypoints[k].t > w->waypoints[k - 1].t)) {
          throw ScenarioError("obstacle " + std::to_string(o.id) +
                              ": waypoint times must be strictly increasing");
        }
      }
    }
    if (const auto* s = std::get_if<SinusoidalMotion>(&o.motion)) {
      if (!(s->period > 0.0)) {
        throw ScenarioError("obstacle " + std::to_string(o.id) + ": period must be > 0");
      }
    }
  }
}

int Scenario::steps() const { return static_cast<int>(std::llround(horizon_T / dt)); }

std::vector<ObstacleTrajectory> simulate_track(const Scenario& scenario, int history_steps) {
  scenario.validate();
  if (history_steps < 0) throw std::invalid_argument("history_steps must be >= 0");
  const int steps = scenario.steps();
  std::vector<ObstacleTrajectory> out;
  out.reserve(scenario.obstacles.size());
  for (const ObstacleSpec& o : scenario.obstacles) {
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(steps + history_steps + 1));
    for (int k = -history_steps; k <= steps; ++k) {
      double t = k * scenario.dt;
      Vec2 p = motion_position(o.motion, t);
      if (k >= 0 && !scenario.workspace.contains(p)) {
        throw ScenarioError("obstacle " + std::to_string(o.id) + " leaves the workspace at t=" +
                            fmt_double(t) + " (" + fmt_double(p.x) + ", " + fmt_double(p.y) +
                            ")");
      }
      samples.push_back({t, p});
    }
    out.emplace_back(o.id, std::move(samples), o.radius);
  }
  return out;
}

std::vector<ObstacleTrajectory> simulate_truth(const Scenario& scenario) {
  return simulate_track(scenario, 0);
}

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::constant_velocity: return "constant_velocity";
    case PredictorKind::noisy_kinematic: return "noisy_kinematic";
    case PredictorKind::oracle_with_noise: return "oracle_with_noise";
  }
  return "unknown";
}

PredictorKind predictor_kind_from_string(const std::string& name) {
  if (name == "constant_velocity") return PredictorKind::constant_velocity;
  if (name == "noisy_kinematic") return PredictorKind::noisy_kinematic;
  if (name == "oracle_with_noise") return PredictorKind::oracle_with_noise;
  throw std::invalid_argument("unknown predictor kind '" + name + "'");
}

void Predictor::validate() const {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("predictor noise_sigma must be >= 0");
  if (lookback < 1) throw std::invalid_argument("predictor lookback must be >= 1");
}

ObstacleTrajectory predict(const Predictor& predictor, const ObstacleTrajectory& track,
                           std::size_t history_len, int horizon_steps, double dt,
                           std::uint64_t seed) {
  predictor.validate();
  if (horizon_steps < 1) throw std::invalid_argument("horizon_steps must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  const auto lookback = static_cast<std::size_t>(predictor.lookback);
  if (history_len < lookback || history_len > track.samples().size()) {
    throw std::invalid_argument("insufficient history: predictor needs " +
                                std::to_string(lookback) + " samples, got " +
                                std::to_string(history_len));
  }

  const auto& hist = track.samples();
  const Sample& last = hist[history_len - 1];
  Vec2 velocity{0.0, 0.0};
  if (lookback >= 2) {
    const Sample& first = hist[history_len - lookback];
    velocity = (last.position - first.position) * (1.0 / (last.t - first.t));
  }

  Rng rng(seed);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(horizon_steps));
  Vec2 walk{0.0, 0.0};
  for (int k = 1; k <= horizon_steps; ++k) {
    double t = last.t + k * dt;
    Vec2 p;
    switch (predictor.kind) {
      case PredictorKind::constant_velocity:
        p = last.position + velocity * (k * dt);
        break;
      case PredictorKind::noisy_kinematic: {
        double nx = gaussian(rng, predictor.noise_sigma);
        double ny = gaussian(rng, predictor.noise_sigma);
        walk = walk + Vec2{nx, ny};
        p = last.position + velocity * (k * dt) + walk;
        break;
      }
      case PredictorKind::oracle_with_noise: {
        double tq = std::clamp(t, track.t_begin(), track.t_end());
        double nx = gaussian(rng, predictor.noise_sigma);
        double ny = gaussian(rng, predictor.noise_sigma);
        p = track.position_at(tq) + Vec2{nx, ny};
        break;
      }
    }
    out.push_back({t, p});
  }
  if (out.size() < 2) out.insert(out.begin(), last);
  return ObstacleTrajectory(track.id(), std::move(out), track.radius());
}

double true_clearance(Vec2 position, double t, std::span<const ObstacleTrajectory> truth,
                      double robot_radius) {
  double best = std::numeric_limits<double>::infinity();
  for (const ObstacleTrajectory& o : truth) {
    best = std::min(best, distance(position, o.position_at(t)) - o.radius() - robot_radius);
  }
  return best;
}

bool point_collides(Vec2 position, double t, std::span<const ObstacleTrajectory> truth,
                    double robot_radius) {
  for (const ObstacleTrajectory& o : truth) {
    if (distance(position, o.position_at(t)) <= robot_radius + o.radius()) return true;
  }
  return false;
}

Vec2 Forecast::position(double t, int obstacle) const {
  double s = t / dt;
  if (s <= 0.0) return at.front()[static_cast<std::size_t>(obstacle)];
  auto k = static_cast<std::size_t>(std::floor(s));
  if (k + 1 >= at.size()) return at.back()[static_cast<std::size_t>(obstacle)];
  double f = s - static_cast<double>(k);
  const auto i = static_cast<std::size_t>(obstacle);
  if (f == 0.0) return at[k][i];
  return lerp(at[k][i], at[k + 1][i], f);
}

Forecast to_forecast(std::span<const ObstacleTrajectory> trajectories, double t0, int steps,
                     double dt) {
  Forecast f;
  f.dt = dt;
  for (const auto& o : trajectories) f.radii.push_back(o.radius());
  f.at.resize(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    auto& row = f.at[static_cast<std::size_t>(k)];
    row.reserve(trajectories.size());
    for (const auto& o : trajectories) row.push_back(o.position_at(t0 + k * dt));
  }
  return f;
}

double min_clearance(Vec2 location, std::span<const Vec2> centers, std::span<const double> radii,
                     double robot_radius) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double r = i < radii.size() ? radii[i] : 0.0;
    best = std::min(best, distance(location, centers[i]) - r - robot_radius);
  }
  return best;
}

void write_trajectories_csv(std::ostream& out, std::span<const ObstacleTrajectory> trajectories) {
  out << "obstacle_id,t,x,y\n";
  for (const auto& o : trajectories) {
    for (const auto& s : o.samples()) {
      out << o.id() << ',' << fmt_double(s.t) << ',' << fmt_double(s.position.x) << ','
          << fmt_double(s.position.y) << '\n';
    }
  }
}

}  // namespace confplan
