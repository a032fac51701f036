#pragma once

#include <cstdint>
#include <vector>

#include "confplan/cp_core.hpp"
#include "confplan/env_sim.hpp"

namespace confplan::harness {

/// Ground truth on the planner's step grid, read straight from the track.
/// Step k is time (anchor + k) * dt.
Forecast truth_forecast(const std::vector<ObstacleTrajectory>& track, int history_steps,
                        int anchor, int steps, double dt);

/// Forecast issued at step `anchor` from the observed history: step 0 is the
/// observation itself, steps 1.. come from the predictor. Obstacle i uses
/// the stream mix_seed(seed, i).
Forecast predicted_forecast(const Predictor& predictor,
                            const std::vector<ObstacleTrajectory>& track, int history_steps,
                            int anchor, int steps, double dt, std::uint64_t seed);

struct EpisodePlan {
  int n_episodes = 0;
  int steps = 0;
  // Forecast anchors are drawn uniformly from [0, max_anchor].
  int max_anchor = 0;
  std::uint64_t seed = 0;
};

struct Episodes {
  std::vector<Forecast> truths;
  std::vector<Forecast> predictions;
  std::vector<int> anchors;
};

/// Episode j draws its anchor from mix_seed(seed, j) and its forecast noise
/// from mix_seed(seed, j) as well, so episodes are independent of `jobs`.
Episodes make_episodes(const Predictor& predictor, const std::vector<ObstacleTrajectory>& track,
                       int history_steps, double dt, const EpisodePlan& plan, int jobs = 1);

/// Nonconformity scores of freshly generated episodes.
CalibrationSet calibrate(const Predictor& predictor, const std::vector<ObstacleTrajectory>& track,
                         int history_steps, double dt, const EpisodePlan& plan, int jobs = 1);

/// Writes `episode,t,score`.
void write_scores_csv(std::ostream& out, const CalibrationSet& cal);

}  // namespace confplan::harness
