#include "confplan/cp_core.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "confplan/format.hpp"

namespace confplan {

CalibrationSet::CalibrationSet(std::size_t n_episodes, std::size_t horizon_steps,
                               std::vector<double> scores)
    : n_episodes_(n_episodes), horizon_steps_(horizon_steps), scores_(std::move(scores)) {
  if (n_episodes_ < 1) throw std::invalid_argument("calibration set needs at least one episode");
  if (horizon_steps_ < 1) throw std::invalid_argument("calibration set needs at least one step");
  if (scores_.size() != n_episodes_ * horizon_steps_) {
    throw std::invalid_argument("calibration score matrix is not fully populated");
  }
  for (double s : scores_) {
    if (!(s >= 0.0)) throw std::invalid_argument("calibration scores must be >= 0");
  }
  sorted_.resize(scores_.size());
  for (std::size_t t = 0; t < horizon_steps_; ++t) {
    auto col = sorted_.begin() + static_cast<std::ptrdiff_t>(t * n_episodes_);
    for (std::size_t j = 0; j < n_episodes_; ++j) col[static_cast<std::ptrdiff_t>(j)] = score(j, t);
    std::sort(col, col + static_cast<std::ptrdiff_t>(n_episodes_));
  }
}

std::span<const double> CalibrationSet::sorted_column(std::size_t t) const {
  if (t >= horizon_steps_) throw std::out_of_range("calibration step out of range");
  return {sorted_.data() + t * n_episodes_, n_episodes_};
}

std::vector<double> CalibrationSet::column(std::size_t t) const {
  if (t >= horizon_steps_) throw std::out_of_range("calibration step out of range");
  std::vector<double> out(n_episodes_);
  for (std::size_t j = 0; j < n_episodes_; ++j) out[j] = score(j, t);
  return out;
}

CalibrationSet collect_scores(std::span<const Forecast> truths,
                              std::span<const Forecast> predictions) {
  if (truths.size() != predictions.size()) {
    throw std::invalid_argument("truths and predictions differ in episode count");
  }
  if (truths.empty()) throw std::invalid_argument("no calibration episodes");
  const int steps = truths.front().steps();
  std::vector<double> scores;
  scores.reserve(truths.size() * static_cast<std::size_t>(steps));
  for (std::size_t j = 0; j < truths.size(); ++j) {
    const Forecast& truth = truths[j];
    const Forecast& pred = predictions[j];
    if (truth.steps() != steps || pred.steps() != steps) {
      throw std::invalid_argument("episode " + std::to_string(j) + " is misaligned in steps");
    }
    if (truth.obstacles() != pred.obstacles()) {
      throw std::invalid_argument("episode " + std::to_string(j) +
                                  " has mismatched obstacle counts");
    }
    for (int t = 0; t < steps; ++t) {
      const auto& tr = truth.at[static_cast<std::size_t>(t)];
      const auto& pr = pred.at[static_cast<std::size_t>(t)];
      if (tr.size() != pr.size()) {
        throw std::invalid_argument("episode " + std::to_string(j) +
                                    " has mismatched obstacle counts at step " +
                                    std::to_string(t));
      }
      double r = 0.0;
      for (std::size_t i = 0; i < tr.size(); ++i) r = std::max(r, distance(pr[i], tr[i]));
      scores.push_back(r);
    }
  }
  return CalibrationSet(truths.size(), static_cast<std::size_t>(steps), std::move(scores));
}

ConformalRank conformal_rank(std::size_t n, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("confidence must lie in (0, 1), got " + fmt_double(confidence));
  }
  if (n < 1) throw std::invalid_argument("conformal rank needs n >= 1");
  // (n+1)c is computed in floating point; shave rounding noise before the ceiling
  // so that e.g. 10 * 0.9 does not become rank 10 + 1.
  double x = static_cast<double>(n + 1) * confidence;
  double k = std::ceil(x - 1e-9 * std::max(1.0, x));
  ConformalRank r;
  r.k = static_cast<std::size_t>(std::max(1.0, k));
  if (r.k > n) {
    r.k = n;
    r.rank_clipped = true;
  }
  return r;
}

QuantileThreshold quantile_threshold(const CalibrationSet& cal, std::size_t t, double confidence) {
  ConformalRank rank = conformal_rank(cal.n_episodes(), confidence);
  auto col = cal.sorted_column(t);
  return {col[rank.k - 1], rank.rank_clipped};
}

double confidence_from_distance(const CalibrationSet& cal, std::size_t t, double d_min) {
  auto col = cal.sorted_column(t);
  auto count = std::upper_bound(col.begin(), col.end(), d_min) - col.begin();
  return static_cast<double>(count) / static_cast<double>(col.size());
}

double confidence_at(const CalibrationSet& cal, Vec2 location, std::size_t t,
                     std::span<const Vec2> predicted) {
  if (predicted.empty()) throw std::invalid_argument("confidence_at needs predicted positions");
  double d = std::numeric_limits<double>::infinity();
  for (Vec2 p : predicted) d = std::min(d, distance(location, p));
  return confidence_from_distance(cal, t, d);
}

void ConfidenceLadder::validate() const {
  if (levels.empty()) throw std::invalid_argument("confidence ladder is empty");
  if (!(c_min >= 0.0 && c_min <= 1.0)) throw std::invalid_argument("c_min must lie in [0, 1]");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] >= 0.0 && levels[i] <= 1.0)) {
      throw std::invalid_argument("ladder levels must lie in [0, 1]");
    }
    if (levels[i] < c_min) throw std::invalid_argument("ladder level below c_min");
    if (i > 0 && !(levels[i] < levels[i - 1])) {
      throw std::invalid_argument("ladder levels must be strictly decreasing");
    }
  }
}

std::size_t ConfidenceLadder::highest_not_exceeding(double c) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] <= c) return i;
  }
  return levels.size();
}

QuantileTable::QuantileTable(std::vector<double> levels, std::size_t horizon_steps,
                             std::vector<double> thresholds)
    : levels_(std::move(levels)), horizon_steps_(horizon_steps), thresholds_(std::move(thresholds)) {
  if (thresholds_.size() != levels_.size() * horizon_steps_) {
    throw std::invalid_argument("quantile table shape mismatch");
  }
  for (double v : thresholds_) {
    if (!(v >= 0.0)) throw std::invalid_argument("quantile thresholds must be >= 0");
  }
}

std::size_t QuantileTable::level_index(double confidence) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (std::abs(levels_[i] - confidence) < 1e-12) return i;
  }
  throw std::invalid_argument("confidence " + fmt_double(confidence) +
                              " is not a level of the quantile table");
}

double QuantileTable::lookup(double confidence, std::size_t t) const {
  return threshold(level_index(confidence), std::min(t, horizon_steps_ - 1));
}

QuantileTable build_quantile_table(const CalibrationSet& cal, const ConfidenceLadder& ladder) {
  ladder.validate();
  std::vector<double> thresholds;
  thresholds.reserve(ladder.size() * cal.horizon_steps());
  bool clipped = false;
  for (double c : ladder.levels) {
    for (std::size_t t = 0; t < cal.horizon_steps(); ++t) {
      QuantileThreshold q = quantile_threshold(cal, t, c);
      clipped = clipped || q.rank_clipped;
      thresholds.push_back(q.value);
    }
  }
  QuantileTable table(ladder.levels, cal.horizon_steps(), std::move(thresholds));
  table.set_rank_clipped(clipped);
  return table;
}

void write_quantile_table_csv(std::ostream& out, const QuantileTable& table) {
  out << "confidence,t,threshold\n";
  for (std::size_t c = 0; c < table.levels().size(); ++c) {
    for (std::size_t t = 0; t < table.horizon_steps(); ++t) {
      out << fmt_double(table.levels()[c]) << ',' << t << ',' << fmt_double(table.threshold(c, t))
          << '\n';
    }
  }
}

QuantileTable read_quantile_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("confidence,t,threshold", 0) != 0) {
    throw std::runtime_error("quantile table CSV must start with header confidence,t,threshold");
  }
  // Levels keep first-appearance order; rows may come in any order.
  std::vector<double> levels;
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::size_t steps = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw std::runtime_error("malformed quantile table row at line " + std::to_string(lineno));
    }
    double conf = std::stod(a);
    std::size_t t = std::stoul(b);
    double thr = std::stod(c);
    auto it = std::find(levels.begin(), levels.end(), conf);
    std::size_t li = static_cast<std::size_t>(it - levels.begin());
    if (it == levels.end()) levels.push_back(conf);
    cells[{li, t}] = thr;
    steps = std::max(steps, t + 1);
  }
  std::vector<double> thresholds(levels.size() * steps);
  for (std::size_t li = 0; li < levels.size(); ++li) {
    for (std::size_t t = 0; t < steps; ++t) {
      auto it = cells.find({li, t});
      if (it == cells.end()) throw std::runtime_error("quantile table CSV has missing entries");
      thresholds[li * steps + t] = it->second;
    }
  }
  return QuantileTable(std::move(levels), steps, std::move(thresholds));
}

}  // namespace confplan
