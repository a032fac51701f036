#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "confplan/geometry.hpp"

namespace confplan {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar rectangle [0,width] x [0,height] discretized into square cells.
/// Cell (x, y) covers [x*res, (x+1)*res) x [y*res, (y+1)*res); planners use
/// the cell center as the vertex position.
struct Workspace {
  double width = 1.0;
  double height = 1.0;
  double grid_resolution = 1.0;
  std::vector<Cell> static_blocked_cells;  // kept sorted and unique

  void validate() const;

  int cols() const;
  int rows() const;
  int cell_count() const { return cols() * rows(); }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < cols() && c.y < rows(); }
  bool is_blocked(Cell c) const;
  bool is_free(Cell c) const { return in_bounds(c) && !is_blocked(c); }
  bool contains(Vec2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height; }

  int index(Cell c) const { return c.y * cols() + c.x; }
  Cell cell(int index) const { return {index % cols(), index / cols()}; }
  Vec2 center(Cell c) const;
  Cell cell_at(Vec2 p) const;
};

struct Sample {
  double t = 0.0;
  Vec2 position;
};

/// Time-indexed positions of one obstacle; linear interpolation between samples.
class ObstacleTrajectory {
 public:
  ObstacleTrajectory() = default;
  ObstacleTrajectory(int obstacle_id, std::vector<Sample> samples, double radius = 0.0);

  int id() const { return id_; }
  double radius() const { return radius_; }
  const std::vector<Sample>& samples() const { return samples_; }
  double t_begin() const { return samples_.front().t; }
  double t_end() const { return samples_.back().t; }

  // Throws std::out_of_range outside [t_begin, t_end]. Exact sample at sample times.
  Vec2 position_at(double t) const;

 private:
  int id_ = 0;
  std::vector<Sample> samples_;
  double radius_ = 0.0;
};

struct ConstantVelocityMotion {
  Vec2 start;
  Vec2 velocity;
};

/// Piecewise-linear motion through timed waypoints; holds the first/last
/// waypoint before/after the covered span.
struct WaypointMotion {
  std::vector<Sample> waypoints;
};

/// center + velocity*t + amplitude*sin(2*pi*t/period + phase) * unit(direction)
struct SinusoidalMotion {
  Vec2 center;
  Vec2 velocity;
  Vec2 direction{0.0, 1.0};
  double amplitude = 0.0;
  double period = 1.0;
  double phase = 0.0;
};

using MotionSpec = std::variant<ConstantVelocityMotion, WaypointMotion, SinusoidalMotion>;

Vec2 motion_position(const MotionSpec& motion, double t);

struct ObstacleSpec {
  int id = 0;
  MotionSpec motion;
  double radius = 0.0;
};

struct Scenario {
  Workspace workspace;
  std::vector<ObstacleSpec> obstacles;
  double horizon_T = 1.0;
  double dt = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
  int steps() const;  // horizon_T / dt
};

/// One trajectory per obstacle, sampled at every multiple of dt in [0, horizon_T].
/// Throws ScenarioError if any obstacle leaves the workspace.
std::vector<ObstacleTrajectory> simulate_truth(const Scenario& scenario);

/// Like simulate_truth but prefixed with `history_steps` samples at negative
/// times (-history_steps*dt .. -dt), the observations available before t = 0.
/// Containment is only enforced on [0, horizon_T].
std::vector<ObstacleTrajectory> simulate_track(const Scenario& scenario, int history_steps);

enum class PredictorKind { constant_velocity, noisy_kinematic, oracle_with_noise };

std::string to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(const std::string& name);

/// Plug-in obstacle forecaster.
///  - constant_velocity: extrapolates the mean velocity over the last `lookback` samples.
///  - noisy_kinematic: constant_velocity plus a seeded Gaussian random walk (per-step sigma).
///  - oracle_with_noise: ground truth plus i.i.d. Gaussian noise per step.
struct Predictor {
  PredictorKind kind = PredictorKind::constant_velocity;
  double noise_sigma = 0.0;
  int lookback = 2;

  void validate() const;
};

/// Forecast `horizon_steps` samples after sample `history_len - 1` of `track`.
/// Only the first `history_len` samples are read unless the predictor is the
/// oracle, which reads the future of `track` (held at its last sample beyond it).
ObstacleTrajectory predict(const Predictor& predictor, const ObstacleTrajectory& track,
                           std::size_t history_len, int horizon_steps, double dt,
                           std::uint64_t seed);

/// True iff some obstacle i satisfies |position - tau_i(t)| <= robot_radius + radius_i.
bool point_collides(Vec2 position, double t, std::span<const ObstacleTrajectory> truth,
                    double robot_radius);

/// Minimum over obstacles of |position - center_i| - radius_i - robot_radius.
double true_clearance(Vec2 position, double t, std::span<const ObstacleTrajectory> truth,
                      double robot_radius);

/// Step-aligned obstacle positions: at[t][i] is obstacle i at step t.
/// Used both for predictions and for ground truth on the planner's step grid.
struct Forecast {
  double dt = 1.0;
  std::vector<double> radii;
  std::vector<std::vector<Vec2>> at;

  int steps() const { return static_cast<int>(at.size()); }
  int obstacles() const { return static_cast<int>(radii.size()); }
  // Linear interpolation in time; held constant beyond the last step.
  Vec2 position(double t, int obstacle) const;
};

/// Samples each trajectory at t0 + k*dt for k = 0..steps-1.
Forecast to_forecast(std::span<const ObstacleTrajectory> trajectories, double t0, int steps,
                     double dt);

/// Minimum clearance to the forecast obstacles at step t (footprints subtracted).
double min_clearance(Vec2 location, std::span<const Vec2> centers, std::span<const double> radii,
                     double robot_radius);

void write_trajectories_csv(std::ostream& out, std::span<const ObstacleTrajectory> trajectories);

}  // namespace confplan
