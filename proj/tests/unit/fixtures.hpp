#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "confplan/cp_core.hpp"
#include "confplan/env_sim.hpp"
#include "confplan/grid_planning.hpp"
#include "confplan/rng.hpp"

namespace fixtures {

using namespace confplan;

struct GridInstance {
  Workspace ws;
  Forecast forecast;
  QuantileTable table;
  ConfidenceLadder ladder;
  Cell start;
  Cell goal;
  int T = 0;
};

// Scores that grow with the step so thresholds differ per level and step.
inline CalibrationSet synthetic_calibration(std::uint64_t seed, std::size_t n, std::size_t steps,
                                            double base = 0.1, double growth = 0.05) {
  Rng rng(seed);
  std::vector<double> s;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t t = 0; t < steps; ++t) {
      s.push_back(std::abs(gaussian(rng, 1.0)) * (base + growth * static_cast<double>(t)));
    }
  }
  return CalibrationSet(n, steps, std::move(s));
}

inline GridInstance random_instance(std::uint64_t seed, int max_side = 8, int max_T = 30,
                                    int max_obstacles = 3, double block_prob = 0.1) {
  Rng rng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  GridInstance g;
  const int side = uniform_int(3, max_side);
  g.ws.width = side;
  g.ws.height = side;
  g.ws.grid_resolution = 1.0;
  g.T = uniform_int(side, max_T);
  g.start = {uniform_int(0, side - 1), uniform_int(0, side - 1)};
  g.goal = {uniform_int(0, side - 1), uniform_int(0, side - 1)};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      Cell c{x, y};
      if (c == g.start || c == g.goal) continue;
      if (uniform01(rng) < block_prob) g.ws.static_blocked_cells.push_back(c);
    }
  }
  const int n_obs = uniform_int(0, max_obstacles);
  g.forecast.dt = 1.0;
  g.forecast.at.assign(static_cast<std::size_t>(g.T), {});
  for (int i = 0; i < n_obs; ++i) {
    Vec2 p{uniform01(rng) * side, uniform01(rng) * side};
    Vec2 v{(uniform01(rng) - 0.5) * 1.2, (uniform01(rng) - 0.5) * 1.2};
    g.forecast.radii.push_back(uniform01(rng) < 0.5 ? 0.0 : 0.3);
    for (int t = 0; t < g.T; ++t) g.forecast.at[static_cast<std::size_t>(t)].push_back(p + v * t);
  }
  g.ladder = {{0.95, 0.9, 0.8}, 0.8};
  g.table = build_quantile_table(synthetic_calibration(seed ^ 0x5eedULL, 60,
                                                       static_cast<std::size_t>(g.T)),
                                 g.ladder);
  return g;
}

// Safety predicate recomputed from scratch: every obstacle's clearance from
// the cell center strictly exceeds the threshold.
inline bool cell_safe(const GridInstance& g, Cell c, int t, double confidence) {
  if (!g.ws.is_free(c)) return false;
  Vec2 p = g.ws.center(c);
  double q = g.table.lookup(confidence, static_cast<std::size_t>(t));
  const auto& row = g.forecast.at[static_cast<std::size_t>(t)];
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!(distance(p, row[i]) - g.forecast.radii[i] > q)) return false;
  }
  return true;
}

inline bool midpoint_safe(const GridInstance& g, Cell a, Cell b, int t, double confidence) {
  Vec2 p = lerp(g.ws.center(a), g.ws.center(b), 0.5);
  double q = std::max(g.table.lookup(confidence, static_cast<std::size_t>(t)),
                      g.table.lookup(confidence, static_cast<std::size_t>(t + 1)));
  const auto& r0 = g.forecast.at[static_cast<std::size_t>(t)];
  const auto& r1 = g.forecast.at[static_cast<std::size_t>(t + 1)];
  for (std::size_t i = 0; i < r0.size(); ++i) {
    if (!(distance(p, lerp(r0[i], r1[i], 0.5)) - g.forecast.radii[i] > q)) return false;
  }
  return true;
}

// Earliest arrival at the goal over the time-expanded grid, or -1. Uses the
// loosest admissible confidence since safe sets nest across levels.
inline int bfs_earliest_arrival(const GridInstance& g, double confidence, bool eight,
                                bool allow_wait = true) {
  const int cols = g.ws.cols();
  const int rows = g.ws.rows();
  std::vector<char> frontier(static_cast<std::size_t>(cols * rows), 0);
  if (!cell_safe(g, g.start, 0, confidence)) return -1;
  frontier[static_cast<std::size_t>(g.ws.index(g.start))] = 1;
  for (int t = 0; t < g.T; ++t) {
    if (frontier[static_cast<std::size_t>(g.ws.index(g.goal))]) return t;
    if (t + 1 >= g.T) break;
    std::vector<char> next(frontier.size(), 0);
    for (int idx = 0; idx < cols * rows; ++idx) {
      if (!frontier[static_cast<std::size_t>(idx)]) continue;
      Cell a = g.ws.cell(idx);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const bool diag = dx != 0 && dy != 0;
          if (diag && !eight) continue;
          if (dx == 0 && dy == 0 && !allow_wait) continue;
          Cell b{a.x + dx, a.y + dy};
          if (!g.ws.in_bounds(b) || !cell_safe(g, b, t + 1, confidence)) continue;
          if (diag) {
            if (g.ws.is_blocked({b.x, a.y}) || g.ws.is_blocked({a.x, b.y})) continue;
            if (!midpoint_safe(g, a, b, t, confidence)) continue;
          }
          next[static_cast<std::size_t>(g.ws.index(b))] = 1;
        }
      }
    }
    frontier = std::move(next);
  }
  return -1;
}

}  // namespace fixtures
