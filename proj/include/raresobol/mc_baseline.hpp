#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "raresobol/sampling.hpp"

namespace raresobol {

/// Scalar quantity of interest of an input vector.
using Qoi = std::function<double(std::span<const double>)>;

/// Draws one input vector from its law.
using InputSampler = std::function<std::vector<double>(RandomStream&)>;

struct MCEstimate {
  double p_hat = 0.0;
  std::size_t n_samples = 0;
  /// Coefficient of variation sqrt((1-p)/(n p)); empty when p_hat == 0,
  /// meaning the event is too rare for this sample size.
  std::optional<double> cov_hat;
  std::size_t n_evals = 0;
};

/// Indicator-mean estimate of P(q(theta) > tau).
MCEstimate mc_probability(const Qoi& qoi, const InputSampler& law, std::size_t n,
                          double tau, RandomStream& stream);

/// Coefficient of variation of the plain MC estimator with n samples at
/// probability p. Empty when p == 0.
std::optional<double> mc_cov(double p, std::size_t n);

/// Sample size 1/(delta^2 p) needed for a target coefficient of variation.
std::uint64_t mc_samples_for_cov(double p, double delta);

/// Upper bound sqrt((1-m)/m) on the coefficient of variation of any
/// [0,1]-valued random variable with mean m.
double cov_bound(double mean);

/// Moments of an ensemble with the 1/n variance, so that
/// variance <= mean (1 - mean) holds exactly for values in [0,1].
struct EnsembleMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::optional<double> cov;  // empty for a zero mean
};
EnsembleMoments ensemble_moments(std::span<const double> values);

enum class DesignKind { iid, latin_hypercube };

struct SaltelliReport {
  std::vector<double> first_order;  // raw, may be slightly outside [0,1]
  std::vector<double> total;
  double variance = 0.0;
  std::size_t n_evals = 0;

  /// Copy with every index clipped to [0,1], for display only.
  SaltelliReport clipped() const;
};

/// Pick-and-freeze Sobol' indices with Jansen estimators.
///
/// Uses two base designs A and B of n_base rows and the M hybrids A_B^(i)
/// (A with column i taken from B): n_base (M + 2) evaluations of f.
///   S_i = (V - mean((f(B) - f(A_B^i))^2) / 2) / V
///   T_i = mean((f(A) - f(A_B^i))^2) / (2 V)
/// with V the variance of the pooled f(A), f(B) values.
SaltelliReport saltelli_sobol(const Qoi& f, const UniformBox& box,
                              std::size_t n_base, RandomStream& stream,
                              DesignKind design = DesignKind::iid);

/// Largest base size whose n_base (M + 2) cost fits in the budget.
std::size_t saltelli_base_size(std::size_t budget, std::size_t dim);

}  // namespace raresobol
