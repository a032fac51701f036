#include "confplan/acp_online.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "confplan/format.hpp"
#include "confplan/rng.hpp"

namespace confplan {

namespace {

double ks_sorted(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    // Step both ECDFs past every copy of the next support point.
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace

double ks_distance(std::span<const double> sample_a, std::span<const double> sample_b) {
  if (sample_a.empty() || sample_b.empty()) {
    throw std::invalid_argument("ks_distance needs two nonempty samples");
  }
  std::vector<double> a(sample_a.begin(), sample_a.end());
  std::vector<double> b(sample_b.begin(), sample_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return ks_sorted(a, b);
}

void GateConfig::validate() const {
  if (block_len_B < 1) throw std::invalid_argument("gate block length B must be >= 1");
  if (warmup_W0 < 2 * block_len_B) throw std::invalid_argument("gate warm-up W0 must be >= 2B");
  if (n_permutations_N < 19) throw std::invalid_argument("gate needs N >= 19 permutations");
  if (!(alpha_gate > 0.0 && alpha_gate < 1.0)) {
    throw std::invalid_argument("alpha_gate must lie in (0, 1)");
  }
}

std::string to_string(GateVerdict v) {
  switch (v) {
    case GateVerdict::insufficient_feedback: return "insufficient_feedback";
    case GateVerdict::accept: return "accept";
    case GateVerdict::reject: return "reject";
  }
  return "unknown";
}

GateResult exchangeability_gate(std::span<const double> cal_scores,
                                std::span<const double> new_scores, const GateConfig& cfg) {
  cfg.validate();
  GateResult result;
  if (new_scores.size() < static_cast<std::size_t>(cfg.warmup_W0) || cal_scores.empty()) {
    return result;
  }
  result.ks_distance_D = ks_distance(cal_scores, new_scores);

  std::vector<double> pooled(cal_scores.begin(), cal_scores.end());
  pooled.insert(pooled.end(), new_scores.begin(), new_scores.end());
  const std::size_t n_cal = cal_scores.size();
  const auto B = static_cast<std::size_t>(cfg.block_len_B);
  const std::size_t n_blocks = (pooled.size() + B - 1) / B;
  std::vector<std::size_t> order(n_blocks);
  std::iota(order.begin(), order.end(), 0);

  Rng rng(cfg.rng_seed);
  std::vector<double> permuted;
  permuted.reserve(pooled.size());
  int exceed = 0;
  for (int b = 0; b < cfg.n_permutations_N; ++b) {
    std::shuffle(order.begin(), order.end(), rng);
    permuted.clear();
    for (std::size_t blk : order) {
      std::size_t lo = blk * B;
      std::size_t hi = std::min(lo + B, pooled.size());
      permuted.insert(permuted.end(), pooled.begin() + static_cast<std::ptrdiff_t>(lo),
                      pooled.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    auto mid = permuted.begin() + static_cast<std::ptrdiff_t>(n_cal);
    std::sort(permuted.begin(), mid);
    std::sort(mid, permuted.end());
    double d_star = ks_sorted({permuted.data(), n_cal},
                              {permuted.data() + n_cal, permuted.size() - n_cal});
    if (d_star >= result.ks_distance_D) ++exceed;
  }
  result.p_value = (1.0 + exceed) / (cfg.n_permutations_N + 1.0);
  result.verdict = result.p_value < cfg.alpha_gate ? GateVerdict::reject : GateVerdict::accept;
  return result;
}

void AcpState::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ACP alpha must lie in (0, 1)");
  if (!(kappa > 0.0)) throw std::invalid_argument("ACP kappa must be > 0");
  if (!(lambda_min > 0.0)) throw std::invalid_argument("ACP lambda_min must be > 0");
  if (!(lambda_min <= lambda_max)) throw std::invalid_argument("ACP needs lambda_min <= lambda_max");
  if (!(lambda >= lambda_min && lambda <= lambda_max)) {
    throw std::invalid_argument("ACP lambda outside [lambda_min, lambda_max]");
  }
}

double acp_threshold(const AcpState& state, double d_min) { return state.lambda * d_min; }

int acp_update_inplace(AcpState& state, double score_R_t, double d_min) {
  const int e = score_R_t > acp_threshold(state, d_min) ? 1 : 0;
  state.history.push_back(
      {static_cast<int>(state.history.size()), score_R_t, d_min, state.lambda, e});
  double next = state.lambda * std::exp(state.kappa * (e - state.alpha));
  state.lambda = std::clamp(next, state.lambda_min, state.lambda_max);
  return e;
}

AcpStep acp_update(const AcpState& state, double score_R_t, double d_min) {
  AcpStep out{state, 0};
  out.e = acp_update_inplace(out.state, score_R_t, d_min);
  return out;
}

double acp_region_radius(const AcpState& state, double base_quantile) {
  return state.lambda * base_quantile;
}

void write_acp_trace_csv(std::ostream& out, const AcpState& state) {
  out << "t,R_t,d_min,lambda,e_t\n";
  for (const AcpRecord& r : state.history) {
    out << r.t << ',' << fmt_double(r.score) << ',' << fmt_double(r.reference) << ','
        << fmt_double(r.lambda) << ',' << r.e << '\n';
  }
}

}  // namespace confplan
