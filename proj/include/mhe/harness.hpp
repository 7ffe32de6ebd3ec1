#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhe/certificate.hpp"
#include "mhe/estimator.hpp"
#include "mhe/stability.hpp"
#include "mhe/system.hpp"

namespace mhe {

/// Version of the CSV and report layouts written by the harness.
inline constexpr int kOutputSchemaVersion = 1;

enum class Verb { Analyze, Run, Sweep, Probe };
const char* to_string(Verb verb);
Verb parse_verb(const std::string& text);

struct ExperimentConfig {
  enum class Estimator { FIE, MHE };

  // [experiment]
  std::string plant = "s1";
  std::string certificate;  // empty: "<plant>_<mode>"
  PlusMode mode = PlusMode::Max;
  double A = 1.05;
  Estimator estimator = Estimator::FIE;
  std::size_t K = 2;
  std::size_t K_min = 2, K_max = 8;
  std::vector<std::string> scenarios = {"zero"};
  std::size_t T = 60;
  std::size_t T_max = 200;
  std::size_t seeds = 1;
  std::uint64_t seed = 0;
  /// True initial states are drawn in [-x0_range, x0_range]^n; the prior sits at distance prior_offset.
  double x0_range = 1.0;
  double prior_offset = 1.0;
  double tol_cert = 1e-9;
  /// Amplitude of the known input applied to plants without output feedback.
  double input_amplitude = 0.2;

  // [cost]
  std::string cost = "default";  // default | explicit
  std::string beta_hat, gamma_hat, delta_hat;

  // [grid]
  LogGrid grid{1e-6, 1e3, 48};
  std::int64_t s_max = 200;

  // [solver]
  SolverConfig solver;

  // [falsification]
  std::size_t falsification_pairs = 200;

  // [probe]
  std::size_t probe_time = 10;
  double probe_magnitude = 0.5;

  bool plots = true;

  std::string certificate_id() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
/// Applies "section.key = value" on top of a config.
void set_config_value(ExperimentConfig& config, const std::string& dotted_key, const std::string& value);
/// Every setting, defaults included, in the input format.
std::string echo_config(const ExperimentConfig& config);

/// Artifacts shared by every cell of an experiment.
struct Analysis {
  SystemModel model;
  IossCertificate certificate;
  GrowthSet growth;
  CostSpec cost;
  CompatibilityWitness compatibility;
  DerivedBounds bounds;
  GridEvidence envelopes;
  std::map<std::size_t, ContractionAnalysis> contraction;
  std::map<std::size_t, HatBounds> hats;
  std::map<std::size_t, RgesWitness> rges;
  std::vector<std::size_t> excluded_K;
  std::optional<std::size_t> K0;
  std::optional<BarBounds> bar;
  std::optional<FalsificationReport> falsification;
  std::optional<EventuallyExponentialWitness> exponential;
  bool passed = true;
  std::string failure;
};

/// Resolves fixtures and builds certificate, cost, bounds and (for MHE) the contraction machinery.
/// Throws ConfigError on resolution or mode mismatches.
Analysis analyze(const ExperimentConfig& config, Verb verb);

/// One time step of a bound trace.
struct TraceRow {
  std::size_t t = 0;
  Vec x, xhat;
  double error = 0.0;
  double fie_rhs = 0.0;
  std::optional<double> mhe_rhs;
  std::optional<double> step_rhs;  // one-window recursion, t >= K
  double cost = 0.0;
  double ratio = 0.0;
  bool certified = false;
  double margin = 0.0;  // rhs - error for the estimator's own theorem
  std::string status;
};

struct ProbeResult {
  double perturbation = 0.0;
  bool out_of_range = false;
  double worst_margin = 0.0;
  std::size_t worst_t = 0;
  bool passed = true;
};

struct CellResult {
  std::string key;
  std::string scenario;
  std::uint64_t seed = 0;
  std::optional<std::size_t> K;
  SolutionTuple truth;
  std::vector<TraceRow> rows;
  std::size_t certified_steps = 0;
  double min_margin = 0.0;
  std::size_t worst_t = 0;
  bool passed = true;
  std::optional<ProbeResult> probe;
  std::string error;  // infeasibility or divergence message
  int exit_code = 0;
};

/// Simulates one (scenario, seed[, K]) cell, runs the estimator and evaluates the bounds.
CellResult run_cell(const ExperimentConfig& config, const Analysis& analysis, const std::string& scenario,
                    std::uint64_t seed, std::optional<std::size_t> K, bool probe);

struct ExperimentOutcome {
  Verb verb = Verb::Run;
  ExperimentConfig config;
  Analysis analysis;
  std::vector<CellResult> cells;  // sorted by key
  int exit_code = 0;
  std::string message;
};

/// Exit codes: 0 all margins and analyses pass, 2 configuration or analysis failure,
/// 3 solver infeasibility, 4 bound violation.
ExperimentOutcome run_experiment(const ExperimentConfig& config, Verb verb, int jobs = 1);

/// Writes estimates/, bounds/, truth/, falsification.csv, report.json and plots.json.
void write_outputs(const ExperimentOutcome& outcome, const std::string& dir);
std::string report_json(const ExperimentOutcome& outcome);
std::string summary_text(const ExperimentOutcome& outcome);

}  // namespace mhe
