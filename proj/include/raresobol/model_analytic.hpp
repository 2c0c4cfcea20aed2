#pragma once

// Linear-Gaussian test problem: q(theta) = -(1/sqrt(d)) sum theta_i with
// independent theta_i ~ N(mu_i, sigma_i^2). Its law is normal with known
// parameters, so every rare-event probability has a closed form.

#include <optional>
#include <span>
#include <vector>

#include "raresobol/mc_baseline.hpp"
#include "raresobol/sampling.hpp"

namespace raresobol::analytic {

struct AnalyticHyper {
  std::vector<double> means;
  std::vector<double> variances;

  std::size_t dim() const { return means.size(); }
  void validate() const;

  /// Packed hyper-parameter vector (mu_1..mu_d, sigma_1^2..sigma_d^2).
  std::vector<double> to_xi() const;
  static AnalyticHyper from_xi(std::span<const double> xi);
};

/// Nominal hyper-parameters of the five-dimensional reference case.
AnalyticHyper nominal_hyper();

double qoi(std::span<const double> theta);

struct Pushforward {
  double mean = 0.0;
  double variance = 0.0;
};
Pushforward pushforward_params(const AnalyticHyper& h);

/// P(q > tau) = erfc((tau - mean) / (sqrt(2) sd)) / 2.
double exact_probability(const AnalyticHyper& h, double tau);

/// Same, reading the hyper-parameters from a packed xi vector.
double exact_probability_xi(std::span<const double> xi, double tau);

std::vector<double> sample_theta(const AnalyticHyper& h, RandomStream& stream);

/// QoI of standard-normal inputs u, through theta_i = mu_i + sigma_i u_i.
Qoi standardized_qoi(const AnalyticHyper& h);

struct CovPoint {
  double tau = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> cov;  // empty for a zero-mean ensemble
  std::optional<double> bound;
};

/// Coefficient of variation of P_tau(xi) for xi uniform in the +-perturbation
/// box around h, one row per threshold. The same n_outer xi samples serve
/// every threshold.
std::vector<CovPoint> cov_vs_threshold_curve(const AnalyticHyper& h,
                                             std::span<const double> taus,
                                             double perturbation, std::size_t n_outer,
                                             RandomStream& stream);

}  // namespace raresobol::analytic
