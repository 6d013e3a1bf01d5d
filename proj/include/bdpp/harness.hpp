#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bdpp/geometry.hpp"
#include "bdpp/types.hpp"
#include "bdpp/weights.hpp"

namespace bdpp {

// Parsed experiment description (JSON, schema version 1).  Carries the
// domain, weight and perturbation plus schedule/resolution/Monte Carlo
// settings; see README for the exact field layout.
struct ExperimentConfig {
  DomainSpec domain;
  WeightFunction weight;
  TestFunction u;
  std::vector<double> k_schedule;
  double degree_c = 3.0;
  std::vector<std::pair<double, int>> degree_override;
  int grid_radial = 96;   // base radial resolution (raised per k as needed)
  int grid_angular = 0;   // base angular resolution; 0 means automatic
  std::vector<int> grid_box;  // box domains: base per-axis resolutions
  bool mc_enabled = true;
  int mc_samples = 10000;
  std::uint64_t seed = 12345;
  std::string out_path = "report.csv";
  std::string format = "csv";
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// The built-in disk experiment used when no config file is given.
std::string default_config_json();

// Degree the experiment uses at scale k: the override table if k is listed,
// otherwise the ceil(c k r^2) + 10 rule.
int schedule_degree(const ExperimentConfig& cfg, double k);
// Grid resolution for a degree-D assembly: the configured base raised to
// the Gram floors (radial D+1, angular 2D+2, box axes D+1).
std::vector<int> schedule_resolution(const ExperimentConfig& cfg, int D);

struct ConvergenceRow {
  double k = 0.0;
  int D = 0;
  int N_D = 0;
  double lhs = 0.0;   // (1/k^{n+1}) log det(I + T_k)
  double rhs = 0.0;   // minus the perturbation energy
  double gap = 0.0;   // lhs - rhs
  double tail_indicator = 0.0;
  double deriv_residual = 0.0;  // worst t-derivative identity mismatch
  bool valid = false;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::uint64_t seed = 0;
  bool all_valid() const;
};

// Tolerances certifying a row; fixed here, not configurable.
constexpr double kTailTolerance = 1e-8;
constexpr double kDerivRelTolerance = 1e-4;

ConvergenceReport run_convergence_experiment(const ExperimentConfig& cfg, int threads = 1);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

struct IdentityReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

// Test-only fault injection: corrupts the Gram fed to the orthonormality
// residual check so its failure path can be exercised without touching the
// other checks.
struct SuiteHooks {
  std::function<void(CMat&)> corrupt_gram;
};

// Full identity catalog on canonical fixtures (unit disk; small bidisk and
// box cases for n = 2).  Monte Carlo checks honor cfg.mc_enabled,
// cfg.mc_samples, cfg.seed and report themselves skipped when disabled.
IdentityReport run_identity_suite(const ExperimentConfig& cfg, const SuiteHooks& hooks = {},
                                  int threads = 1);

// format is "csv" or "json"; both carry identical numeric values.
void emit_report(const ConvergenceReport& report, std::ostream& os, const std::string& format);
std::string report_to_string(const ConvergenceReport& report, const std::string& format);

void emit_identity_report(const IdentityReport& report, std::ostream& os);

} // namespace bdpp
