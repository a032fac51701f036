#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "confplan/env_sim.hpp"
#include "confplan/geometry.hpp"

namespace confplan {

/// Nonconformity scores R_j(t) for calibration episode j and horizon step t.
/// Episodes are the exchangeable unit; steps are calibrated independently.
class CalibrationSet {
 public:
  CalibrationSet() = default;
  CalibrationSet(std::size_t n_episodes, std::size_t horizon_steps, std::vector<double> scores);

  std::size_t n_episodes() const { return n_episodes_; }
  std::size_t horizon_steps() const { return horizon_steps_; }
  double score(std::size_t episode, std::size_t t) const {
    return scores_[episode * horizon_steps_ + t];
  }
  // Scores at step t in ascending order.
  std::span<const double> sorted_column(std::size_t t) const;
  std::vector<double> column(std::size_t t) const;

 private:
  std::size_t n_episodes_ = 0;
  std::size_t horizon_steps_ = 0;
  std::vector<double> scores_;  // row-major [episode][t]
  std::vector<double> sorted_;  // column-major, each column sorted
};

/// R_j(t) = max_i |predicted_i(t) - truth_i(t)| for every episode j and step t.
CalibrationSet collect_scores(std::span<const Forecast> truths,
                              std::span<const Forecast> predictions);

struct ConformalRank {
  std::size_t k = 1;          // 1-based order statistic
  bool rank_clipped = false;  // ceil((n+1)c) > n; finite-sample validity needs more episodes
};

/// k = ceil((n + 1) * confidence), clipped to n.
ConformalRank conformal_rank(std::size_t n, double confidence);

struct QuantileThreshold {
  double value = 0.0;
  bool rank_clipped = false;
};

/// Split-conformal threshold C_t: the conformal_rank order statistic of the
/// step-t scores. Throws std::invalid_argument unless 0 < confidence < 1.
QuantileThreshold quantile_threshold(const CalibrationSet& cal, std::size_t t, double confidence);

/// Empirical fraction of step-t scores that are <= d_min.
double confidence_from_distance(const CalibrationSet& cal, std::size_t t, double d_min);

/// c(s, t): fraction of step-t calibration scores not exceeding the distance
/// from `location` to the nearest predicted obstacle.
double confidence_at(const CalibrationSet& cal, Vec2 location, std::size_t t,
                     std::span<const Vec2> predicted);

/// Discrete confidence levels in strictly decreasing order, all >= c_min.
struct ConfidenceLadder {
  std::vector<double> levels;
  double c_min = 0.0;

  void validate() const;
  std::size_t size() const { return levels.size(); }
  double operator[](std::size_t i) const { return levels[i]; }
  // Index of the highest level <= c, or size() if none.
  std::size_t highest_not_exceeding(double c) const;
};

/// thresholds[level][t] = Q^c(t); non-decreasing in confidence for fixed t.
class QuantileTable {
 public:
  QuantileTable() = default;
  QuantileTable(std::vector<double> levels, std::size_t horizon_steps,
                std::vector<double> thresholds);

  const std::vector<double>& levels() const { return levels_; }
  std::size_t horizon_steps() const { return horizon_steps_; }
  double threshold(std::size_t level, std::size_t t) const {
    return thresholds_[level * horizon_steps_ + t];
  }
  // Index of `confidence` in levels(); throws if absent.
  std::size_t level_index(double confidence) const;
  // Step-t threshold at `confidence` with the step clamped to the table.
  double lookup(double confidence, std::size_t t) const;
  // True when some entry used a clipped conformal rank.
  bool any_rank_clipped() const { return any_clipped_; }
  void set_rank_clipped(bool v) { any_clipped_ = v; }

 private:
  std::vector<double> levels_;
  std::size_t horizon_steps_ = 0;
  std::vector<double> thresholds_;
  bool any_clipped_ = false;
};

QuantileTable build_quantile_table(const CalibrationSet& cal, const ConfidenceLadder& ladder);

void write_quantile_table_csv(std::ostream& out, const QuantileTable& table);
QuantileTable read_quantile_table_csv(std::istream& in);

}  // namespace confplan
