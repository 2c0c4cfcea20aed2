#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "raresobol/mc_baseline.hpp"
#include "raresobol/sampling.hpp"

namespace raresobol {

struct SSConfig {
  std::size_t n_per_level = 1000;  // N_SS
  double p0 = 0.1;                 // conditional probability per level
  double tau = 0.0;                // rare-event threshold
  std::size_t max_levels = 20;
  double proposal_spread = 1.0;
  std::size_t threads = 1;  // chains within a level

  /// Throws DomainError unless 0 < p0 < 1, n_per_level * p0 >= 1,
  /// max_levels >= 1 and proposal_spread >= 0.
  void validate() const;
};

struct SSResult {
  double p_hat = 0.0;
  /// tau_1 < ... < tau_{L-1} < tau: intermediate thresholds, then the target.
  std::vector<double> thresholds;
  std::size_t n_levels = 0;
  std::size_t n_evals = 0;
  /// Sample count of each level; the first is n_per_level.
  std::vector<std::size_t> level_sizes;
  /// Conditional probability of the final level, P(F_L | F_{L-1}).
  double final_fraction = 0.0;
  /// max_levels reached before the target threshold.
  bool terminated_early = false;
};

/// An input point together with its QoI value.
struct LevelSample {
  std::vector<double> theta;
  double q = 0.0;
};

struct QuantileCut {
  double tau = 0.0;
  /// Indices of the samples strictly above tau, in descending order of value.
  std::vector<std::size_t> seed_indices;
};

/// p0-tail cut of a level: exactly floor(n p0) samples lie strictly above tau.
///
/// tau is the midpoint between the m-th and (m+1)-th largest values. Ties
/// across the cut move it to the largest m' <= m with a strict gap; with no
/// such gap a DegenerateLevelError is thrown.
QuantileCut quantile_threshold(std::span<const double> samples, double p0);

/// Modified Metropolis chain started at a seed inside {q > level}.
///
/// Each step perturbs every coordinate by spread * N(0,1) and accepts it
/// with probability min(1, phi(candidate_k) / phi(current_k)) under the
/// standard normal density phi. The assembled candidate replaces the state
/// only if its QoI exceeds `level`; otherwise the state repeats. The chain
/// holds `chain_len` states including the seed. A candidate identical to the
/// current state is not re-evaluated. `evals` is incremented per QoI call.
std::vector<LevelSample> mma_chain(const LevelSample& seed, std::size_t chain_len,
                                   double level, const Qoi& qoi,
                                   double proposal_spread, RandomStream& stream,
                                   std::size_t* evals = nullptr);

/// Subset simulation for P(q(theta) > cfg.tau), theta ~ N(0, I_dim).
///
/// Level 1 is plain MC with n_per_level samples. While the level's p0-cut
/// lies below the target, floor(n p0) chains of length floor(1/p0) grow the
/// next level from the retained seeds. The estimate is the product of the
/// retained fractions of the intermediate levels (p0 each when n p0 is an
/// integer) times the exceedance fraction of the last level.
SSResult run_subset_simulation(const Qoi& qoi, std::size_t dim,
                               const SSConfig& cfg, RandomStream& stream);

/// floor(log p / log p0), the level count minus one for a probability p.
std::size_t expected_levels(double p, double p0);

}  // namespace raresobol
