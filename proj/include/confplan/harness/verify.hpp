#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace confplan::harness {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;  // wall time; never written to the report
};

struct VerifyOptions {
  std::filesystem::path scenario_dir;  // holds coverage.json, cp_sipp_corridor.json, ...
  std::uint64_t seed = 20240601;
  int jobs = 1;
  std::vector<int> only;  // empty = all criteria
};

// Tolerances used by the acceptance checks.
namespace tolerance {
inline constexpr double kSigmas = 3.0;
inline constexpr double kTrackingBand = 0.03;
inline constexpr double kGateAlpha = 0.05;
inline constexpr double kGatePower = 0.9;
inline constexpr double kIdentity = 1e-12;
}  // namespace tolerance

CriterionResult verify_split_coverage(const VerifyOptions& opt);
CriterionResult verify_union_bound(const VerifyOptions& opt);
CriterionResult verify_sipp_parity(const VerifyOptions& opt);
CriterionResult verify_acp_tracking(const VerifyOptions& opt);
CriterionResult verify_gate(const VerifyOptions& opt);
CriterionResult verify_acp_vs_baseline(const VerifyOptions& opt);
CriterionResult verify_identities(const VerifyOptions& opt);

/// Runs the selected criteria. Criterion 8 re-runs 1-7 with a different
/// thread count and compares the serialized reports byte for byte.
std::vector<CriterionResult> run_verify(const VerifyOptions& opt, std::ostream* progress = nullptr);

/// JSON report without timings; identical for identical seeds.
std::string verify_report_json(const std::vector<CriterionResult>& results);

/// "PASS  [1] name  measured=... threshold=...  detail"
std::string pass_fail_line(const CriterionResult& r);

}  // namespace confplan::harness
