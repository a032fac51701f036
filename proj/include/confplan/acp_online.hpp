#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace confplan {

/// Exact two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|,
/// evaluated over the merged sorted support.
double ks_distance(std::span<const double> sample_a, std::span<const double> sample_b);

struct GateConfig {
  int warmup_W0 = 50;
  int block_len_B = 5;
  int n_permutations_N = 199;
  double alpha_gate = 0.05;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

enum class GateVerdict { insufficient_feedback, accept, reject };

std::string to_string(GateVerdict v);

struct GateResult {
  GateVerdict verdict = GateVerdict::insufficient_feedback;
  double ks_distance_D = 0.0;
  double p_value = 1.0;

  bool rejected() const { return verdict == GateVerdict::reject; }
};

/// Block-permutation KS test of calibration vs. new scores. The pooled
/// sequence cal || new is cut into contiguous blocks of length B (the last
/// block may be short), the block order is shuffled N times and resplit at
/// |cal|; p = (1 + #{D* >= D}) / (N + 1). Fewer than W0 new scores yields
/// an insufficient_feedback verdict.
GateResult exchangeability_gate(std::span<const double> cal_scores,
                                std::span<const double> new_scores, const GateConfig& cfg);

struct AcpRecord {
  int t = 0;
  double score = 0.0;
  double reference = 0.0;  // d_min (or base radius) the threshold scales
  double lambda = 1.0;     // lambda_t used for e_t
  int e = 0;
};

/// Online multiplicative scale lambda_t with projected updates
/// lambda_{t+1} = clip(lambda_t * exp(kappa * (e_t - alpha)), lambda_min, lambda_max).
struct AcpState {
  double lambda = 1.0;
  double kappa = 0.05;
  double lambda_min = 0.1;
  double lambda_max = 10.0;
  double alpha = 0.1;
  std::vector<AcpRecord> history;

  void validate() const;
};

/// H(lambda) = lambda * d_min.
double acp_threshold(const AcpState& state, double d_min);

struct AcpStep {
  AcpState state;
  int e = 0;
};

/// e_t = 1{R_t > lambda_t * d_min} with the pre-update lambda, then the
/// projected multiplicative update; appends to the history.
AcpStep acp_update(const AcpState& state, double score_R_t, double d_min);

/// In-place variant used by long-running loops; returns e_t.
int acp_update_inplace(AcpState& state, double score_R_t, double d_min);

/// lambda_t * base_quantile: the inflated prediction radius.
double acp_region_radius(const AcpState& state, double base_quantile);

/// CSV `t,R_t,d_min,lambda,e_t` from the state history.
void write_acp_trace_csv(std::ostream& out, const AcpState& state);

}  // namespace confplan
