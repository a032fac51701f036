#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "confplan/acp_online.hpp"
#include "confplan/rng.hpp"

using namespace confplan;

namespace {

// sup |F_a - F_b| evaluated at every point of the pooled sample.
double ks_brute(const std::vector<double>& a, const std::vector<double>& b) {
  std::set<double> support(a.begin(), a.end());
  support.insert(b.begin(), b.end());
  double d = 0.0;
  for (double x : support) {
    double fa = 0.0;
    double fb = 0.0;
    for (double v : a) fa += v <= x ? 1.0 : 0.0;
    for (double v : b) fb += v <= x ? 1.0 : 0.0;
    d = std::max(d, std::abs(fa / static_cast<double>(a.size()) - fb / static_cast<double>(b.size())));
  }
  return d;
}

}  // namespace

TEST_CASE("KS distance hand values") {
  CHECK(ks_distance(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 3, 4, 5}) == 0.25);
  CHECK(ks_distance(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == 0.0);
  CHECK(ks_distance(std::vector<double>{1, 2}, std::vector<double>{5, 6, 7}) == 1.0);
  CHECK(ks_distance(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(ks_distance(std::vector<double>{}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("KS distance agrees with a brute-force ECDF scan") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(static_cast<std::size_t>(1 + trial % 13));
    std::vector<double> b(static_cast<std::size_t>(1 + trial % 7));
    // Coarse rounding forces ties.
    for (double& v : a) v = std::round(uniform01(rng) * 6.0);
    for (double& v : b) v = std::round(uniform01(rng) * 6.0 + 0.5);
    CHECK(ks_distance(a, b) == doctest::Approx(ks_brute(a, b)).epsilon(1e-15));
  }
}

TEST_CASE("gate needs W0 new scores") {
  GateConfig cfg;
  std::vector<double> cal(100, 1.0);
  std::vector<double> fresh(49, 1.0);
  auto r = exchangeability_gate(cal, fresh, cfg);
  CHECK(r.verdict == GateVerdict::insufficient_feedback);
  CHECK_FALSE(r.rejected());
}

TEST_CASE("gate p-value is floored at 1/(N+1) and capped at 1") {
  GateConfig cfg;
  cfg.n_permutations_N = 199;
  std::vector<double> cal;
  std::vector<double> fresh;
  for (int k = 0; k < 200; ++k) cal.push_back(k * 0.001);
  for (int k = 0; k < 50; ++k) fresh.push_back(10.0 + k * 0.001);
  auto shifted = exchangeability_gate(cal, fresh, cfg);
  CHECK(shifted.ks_distance_D == 1.0);
  CHECK(std::abs(shifted.p_value - 1.0 / 200.0) <= 1e-12);
  CHECK(shifted.rejected());

  std::vector<double> same(50, 0.5);
  std::vector<double> cal_same(200, 0.5);
  auto flat = exchangeability_gate(cal_same, same, cfg);
  CHECK(flat.ks_distance_D == 0.0);
  CHECK(flat.p_value == 1.0);
  CHECK(flat.verdict == GateVerdict::accept);
}

TEST_CASE("gate is deterministic under its seed") {
  Rng rng(5);
  std::vector<double> cal(200);
  std::vector<double> fresh(60);
  for (double& v : cal) v = std::abs(gaussian(rng, 1.0));
  for (double& v : fresh) v = std::abs(gaussian(rng, 1.3));
  GateConfig cfg;
  cfg.rng_seed = 77;
  auto a = exchangeability_gate(cal, fresh, cfg);
  auto b = exchangeability_gate(cal, fresh, cfg);
  CHECK(a.p_value == b.p_value);
  CHECK(a.p_value >= 1.0 / 200.0);
  CHECK(a.p_value <= 1.0);
}

TEST_CASE("gate config validation") {
  GateConfig cfg;
  cfg.block_len_B = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.warmup_W0 = 9;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.n_permutations_N = 18;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha_gate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lambda update closed forms") {
  AcpState s;
  s.lambda = 1.0;
  s.kappa = 0.1;
  s.alpha = 0.1;
  auto miss = acp_update(s, 2.0, 1.0);
  CHECK(miss.e == 1);
  CHECK(std::abs(miss.state.lambda - std::exp(0.09)) <= 1e-12);
  auto hit = acp_update(s, 0.5, 1.0);
  CHECK(hit.e == 0);
  CHECK(std::abs(hit.state.lambda - std::exp(-0.01)) <= 1e-12);
  // The input state is untouched.
  CHECK(s.lambda == 1.0);
  CHECK(s.history.empty());
}

TEST_CASE("miscoverage uses the pre-update lambda") {
  AcpState s;
  s.kappa = 0.1;
  s.alpha = 0.1;
  CHECK(acp_update_inplace(s, 1.5, 1.0) == 1);
  // lambda is now exp(0.09) ~ 1.094, so 1.05 is covered.
  CHECK(acp_update_inplace(s, 1.05, 1.0) == 0);
  REQUIRE(s.history.size() == 2);
  CHECK(s.history[0].lambda == 1.0);
  CHECK(std::abs(s.history[1].lambda - std::exp(0.09)) <= 1e-12);
  CHECK(s.history[1].t == 1);
}

TEST_CASE("ties at the threshold count as covered") {
  AcpState s;
  CHECK(acp_update(s, 1.0, 1.0).e == 0);
}

TEST_CASE("lambda is projected onto its bounds") {
  AcpState s;
  s.lambda = 9.99;
  s.kappa = 1.0;
  s.alpha = 0.1;
  s = acp_update(s, 1e9, 1.0).state;
  CHECK(s.lambda == 10.0);
  s.lambda = 0.1;
  s = acp_update(s, 0.0, 1.0).state;
  CHECK(s.lambda == 0.1);
}

TEST_CASE("unclipped lambda telescopes to kappa times the summed error") {
  AcpState s;
  s.kappa = 0.02;
  s.alpha = 0.2;
  s.lambda_min = 1e-6;
  s.lambda_max = 1e6;
  Rng rng(9);
  double sum = 0.0;
  for (int t = 0; t < 500; ++t) {
    int e = acp_update_inplace(s, std::abs(gaussian(rng, 1.0)), 1.2);
    sum += e - s.alpha;
  }
  CHECK(std::log(s.lambda) == doctest::Approx(s.kappa * sum).epsilon(1e-9));
}

TEST_CASE("ACP state validation") {
  AcpState s;
  s.alpha = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.lambda = 20.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.lambda_min = 2.0;
  s.lambda_max = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("threshold and region radius scale linearly") {
  AcpState s;
  s.lambda = 1.5;
  CHECK(acp_threshold(s, 2.0) == 3.0);
  CHECK(acp_region_radius(s, 0.4) == doctest::Approx(0.6));
}

TEST_CASE("trace CSV") {
  AcpState s;
  s.kappa = 0.1;
  acp_update_inplace(s, 2.0, 1.0);
  std::ostringstream out;
  write_acp_trace_csv(out, s);
  CHECK(out.str() == "t,R_t,d_min,lambda,e_t\n0,2,1,1,1\n");
}
