#include "confplan/harness/episodes.hpp"

#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "confplan/format.hpp"
#include "confplan/harness/parallel.hpp"
#include "confplan/rng.hpp"

namespace confplan::harness {

namespace {

void check_window(const std::vector<ObstacleTrajectory>& track, int history_steps, int anchor,
                  int steps) {
  if (steps < 1) throw std::invalid_argument("episodes need at least one step");
  if (anchor < 0 || history_steps < 0) throw std::invalid_argument("negative anchor or history");
  for (const auto& o : track) {
    auto last = static_cast<std::size_t>(history_steps + anchor + steps - 1);
    if (last >= o.samples().size()) {
      throw std::invalid_argument("episode window [" + std::to_string(anchor) + ", " +
                                  std::to_string(anchor + steps - 1) +
                                  "] runs past the simulated horizon");
    }
  }
}

}  // namespace

Forecast truth_forecast(const std::vector<ObstacleTrajectory>& track, int history_steps,
                        int anchor, int steps, double dt) {
  check_window(track, history_steps, anchor, steps);
  Forecast f;
  f.dt = dt;
  for (const auto& o : track) f.radii.push_back(o.radius());
  f.at.assign(static_cast<std::size_t>(steps), std::vector<Vec2>(track.size()));
  for (std::size_t i = 0; i < track.size(); ++i) {
    const auto& s = track[i].samples();
    for (int k = 0; k < steps; ++k) {
      f.at[static_cast<std::size_t>(k)][i] = s[static_cast<std::size_t>(history_steps + anchor + k)].position;
    }
  }
  return f;
}

Forecast predicted_forecast(const Predictor& predictor,
                            const std::vector<ObstacleTrajectory>& track, int history_steps,
                            int anchor, int steps, double dt, std::uint64_t seed) {
  check_window(track, history_steps, anchor, steps);
  Forecast f;
  f.dt = dt;
  for (const auto& o : track) f.radii.push_back(o.radius());
  f.at.assign(static_cast<std::size_t>(steps), std::vector<Vec2>(track.size()));
  const auto hist_len = static_cast<std::size_t>(history_steps + anchor + 1);
  for (std::size_t i = 0; i < track.size(); ++i) {
    f.at[0][i] = track[i].samples()[hist_len - 1].position;
    if (steps == 1) continue;
    ObstacleTrajectory p = predict(predictor, track[i], hist_len, steps - 1, dt, mix_seed(seed, i));
    // A single-step forecast comes back with the anchor sample in front.
    std::size_t offset = p.samples().size() > static_cast<std::size_t>(steps - 1) ? 1 : 0;
    for (int k = 1; k < steps; ++k) {
      f.at[static_cast<std::size_t>(k)][i] = p.samples()[static_cast<std::size_t>(k - 1) + offset].position;
    }
  }
  return f;
}

Episodes make_episodes(const Predictor& predictor, const std::vector<ObstacleTrajectory>& track,
                       int history_steps, double dt, const EpisodePlan& plan, int jobs) {
  if (plan.n_episodes < 1) throw std::invalid_argument("need at least one episode");
  if (plan.max_anchor < 0) throw std::invalid_argument("max_anchor must be >= 0");
  check_window(track, history_steps, plan.max_anchor, plan.steps);
  const auto n = static_cast<std::size_t>(plan.n_episodes);
  Episodes eps;
  eps.truths.resize(n);
  eps.predictions.resize(n);
  eps.anchors.resize(n);
  parallel_for(n, jobs, [&](std::size_t j) {
    const std::uint64_t s = mix_seed(plan.seed, j);
    int anchor = 0;
    if (plan.max_anchor > 0) {
      Rng rng(s);
      anchor = std::uniform_int_distribution<int>(0, plan.max_anchor)(rng);
    }
    eps.anchors[j] = anchor;
    eps.truths[j] = truth_forecast(track, history_steps, anchor, plan.steps, dt);
    eps.predictions[j] = predicted_forecast(predictor, track, history_steps, anchor, plan.steps,
                                            dt, mix_seed(s, 0x9d));
  });
  return eps;
}

CalibrationSet calibrate(const Predictor& predictor, const std::vector<ObstacleTrajectory>& track,
                         int history_steps, double dt, const EpisodePlan& plan, int jobs) {
  Episodes eps = make_episodes(predictor, track, history_steps, dt, plan, jobs);
  return collect_scores(eps.truths, eps.predictions);
}

void write_scores_csv(std::ostream& out, const CalibrationSet& cal) {
  out << "episode,t,score\n";
  for (std::size_t j = 0; j < cal.n_episodes(); ++j) {
    for (std::size_t t = 0; t < cal.horizon_steps(); ++t) {
      out << j << ',' << t << ',' << fmt_double(cal.score(j, t)) << '\n';
    }
  }
}

}  // namespace confplan::harness
