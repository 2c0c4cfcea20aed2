#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raresobol/pce.hpp"
#include "raresobol/sampling.hpp"
#include "raresobol/sobol_pce.hpp"
#include "raresobol/subset_sim.hpp"

namespace raresobol {

enum class ModelKind { analytic, darcy };
/// How P(xi) is obtained per outer sample: closed form (analytic model only)
/// or a subset-simulation estimate.
enum class InnerKind { exact, ss };

struct ExperimentConfig {
  ModelKind model = ModelKind::analytic;
  std::vector<double> nominal;  // empty: the model's nominal hyper-parameters
  double perturbation = 0.1;
  double tau = 3.0;
  std::size_t n_samp = 1000;
  SSConfig ss;
  unsigned pce_order = 3;
  std::optional<double> lambda = 0.05;  // empty: cross-validated
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t threads = 1;
  InnerKind inner = InnerKind::ss;

  std::size_t darcy_grid = 25;
  std::size_t darcy_n_kl = 0;  // 0: 90% energy at the box's smallest lengths
  double darcy_t_cap = 100.0;
  std::string darcy_mean_field;  // empty: zero mean

  /// Throws ConfigError on any invalid field.
  void validate() const;
  std::vector<double> nominal_xi() const;
  UniformBox box() const;
};

/// Sets one flat dotted key ("ss.p0", "pce.lambda", ...). Unknown keys and
/// ill-typed values throw ConfigError.
void set_option(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& value);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct InnerEstimate {
  double p_hat = 0.0;
  std::size_t levels = 0;
  std::size_t n_evals = 0;
  bool excluded = false;
  std::string reason;  // why the sample was excluded
};

/// P(q > tau) at one hyper-parameter point. Degenerate levels and runs that
/// stop at max_levels come back flagged as excluded.
InnerEstimate estimate_probability(const ExperimentConfig& cfg, std::span<const double> xi,
                                   RandomStream& stream);

struct SampleDiagnostics {
  std::size_t index = 0;
  std::size_t levels = 0;
  std::size_t n_evals = 0;
  bool excluded = false;
  std::string reason;
};

struct RunArtifacts {
  ExperimentConfig config;
  Matrix xi_samples;          // retained samples only
  std::vector<double> p_hats;  // aligned with xi_samples
  std::vector<SampleDiagnostics> diagnostics;  // every outer sample
  PCESurrogate surrogate{UniformBox({0.0}, {1.0}), {}, 0, {}, {}};
  SobolReport sobol;
  double lambda_used = 0.0;
  std::size_t total_evals = 0;
  std::size_t n_excluded = 0;
};

/// Outer LHS design over the box, one inner estimate per row on its own
/// substream, then a sparse Legendre PCE of the estimates and its indices.
RunArtifacts run_double_loop(const ExperimentConfig& cfg);

/// Fits the configured surrogate to (xi, p) and returns it with the lambda used.
std::pair<PCESurrogate, double> fit_probability_surrogate(const ExperimentConfig& cfg,
                                                          const Matrix& xi,
                                                          std::span<const double> p,
                                                          RandomStream& stream);

struct VariabilityTable {
  std::size_t budget = 0;          // evaluations of P per repetition
  std::size_t saltelli_base = 0;   // n_base with n_base (M + 2) <= budget
  std::vector<std::vector<double>> pce_totals;       // one row per repetition
  std::vector<std::vector<double>> saltelli_totals;
  std::vector<double> pce_mean, pce_std, saltelli_mean, saltelli_std;
};

/// Repeats the PCE and Saltelli pipelines n_reps times at cfg.n_samp
/// evaluations of P each and tabulates the spread of the total indices.
VariabilityTable variability_study(const ExperimentConfig& cfg, std::size_t n_reps);

struct SweepCell {
  std::size_t n_ss = 0;
  std::size_t n_samp = 0;
  std::vector<double> mean_total;
  std::vector<double> std_total;
};

/// Total indices for every (N_SS, N_samp) pair. Smaller designs are prefixes
/// of the largest one, so the sample sets are nested.
std::vector<SweepCell> budget_sweep(const ExperimentConfig& cfg,
                                    const std::vector<std::size_t>& n_ss_grid,
                                    const std::vector<std::size_t>& n_samp_grid,
                                    std::size_t n_reps = 1);

void write_artifacts(const RunArtifacts& artifacts, const std::string& dir);
RunArtifacts read_artifacts(const std::string& dir);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace raresobol
