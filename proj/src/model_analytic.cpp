#include "raresobol/model_analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "raresobol/errors.hpp"

namespace raresobol::analytic {

void AnalyticHyper::validate() const {
  if (means.empty() || means.size() != variances.size()) {
    throw DomainError("AnalyticHyper: means and variances must be nonempty and equal length");
  }
  for (double v : variances) {
    if (!(v > 0.0)) throw DomainError("AnalyticHyper: variances must be > 0");
  }
}

std::vector<double> AnalyticHyper::to_xi() const {
  std::vector<double> xi(means);
  xi.insert(xi.end(), variances.begin(), variances.end());
  return xi;
}

AnalyticHyper AnalyticHyper::from_xi(std::span<const double> xi) {
  if (xi.empty() || xi.size() % 2 != 0) {
    throw DomainError("AnalyticHyper::from_xi: xi must hold d means then d variances");
  }
  const std::size_t d = xi.size() / 2;
  AnalyticHyper h{{xi.begin(), xi.begin() + static_cast<std::ptrdiff_t>(d)},
                  {xi.begin() + static_cast<std::ptrdiff_t>(d), xi.end()}};
  h.validate();
  return h;
}

AnalyticHyper nominal_hyper() { return {{1, 2, 3, 4, 5}, {10, 8, 6, 4, 2}}; }

double qoi(std::span<const double> theta) {
  if (theta.empty()) throw DomainError("analytic qoi: empty input");
  double s = 0.0;
  for (double t : theta) s += t;
  return -s / std::sqrt(static_cast<double>(theta.size()));
}

Pushforward pushforward_params(const AnalyticHyper& h) {
  h.validate();
  const double d = static_cast<double>(h.dim());
  Pushforward p;
  for (std::size_t i = 0; i < h.dim(); ++i) {
    p.mean += h.means[i];
    p.variance += h.variances[i];
  }
  p.mean = -p.mean / std::sqrt(d);
  p.variance /= d;
  return p;
}

double exact_probability(const AnalyticHyper& h, double tau) {
  const Pushforward p = pushforward_params(h);
  // Complementary form keeps full relative accuracy in the upper tail.
  const double z = (tau - p.mean) / (std::numbers::sqrt2 * std::sqrt(p.variance));
  return std::clamp(0.5 * std::erfc(z), 0.0, 1.0);
}

double exact_probability_xi(std::span<const double> xi, double tau) {
  return exact_probability(AnalyticHyper::from_xi(xi), tau);
}

std::vector<double> sample_theta(const AnalyticHyper& h, RandomStream& stream) {
  h.validate();
  std::vector<double> theta(h.dim());
  for (std::size_t i = 0; i < h.dim(); ++i) {
    theta[i] = h.means[i] + std::sqrt(h.variances[i]) * standard_normal(stream);
  }
  return theta;
}

Qoi standardized_qoi(const AnalyticHyper& h) {
  h.validate();
  std::vector<double> sd(h.dim());
  std::ranges::transform(h.variances, sd.begin(), [](double v) { return std::sqrt(v); });
  return [means = h.means, sd = std::move(sd)](std::span<const double> u) {
    if (u.size() != means.size()) throw DomainError("analytic qoi: input dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += means[i] + sd[i] * u[i];
    return -s / std::sqrt(static_cast<double>(u.size()));
  };
}

std::vector<CovPoint> cov_vs_threshold_curve(const AnalyticHyper& h,
                                             std::span<const double> taus,
                                             double perturbation, std::size_t n_outer,
                                             RandomStream& stream) {
  h.validate();
  const UniformBox box = UniformBox::around(h.to_xi(), perturbation);
  const Matrix xi = uniform_box_sample(box, n_outer, stream);
  std::vector<AnalyticHyper> hypers;
  hypers.reserve(n_outer);
  std::vector<double> row(box.dim());
  for (std::size_t j = 0; j < n_outer; ++j) {
    for (std::size_t i = 0; i < box.dim(); ++i) row[i] = xi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    hypers.push_back(AnalyticHyper::from_xi(row));
  }

  std::vector<CovPoint> out;
  std::vector<double> probs(n_outer);
  for (double tau : taus) {
    for (std::size_t j = 0; j < n_outer; ++j) probs[j] = exact_probability(hypers[j], tau);
    const EnsembleMoments m = ensemble_moments(probs);
    CovPoint pt{tau, m.mean, std::sqrt(m.variance), m.cov, std::nullopt};
    if (m.mean > 0.0 && m.mean < 1.0) pt.bound = cov_bound(m.mean);
    out.push_back(pt);
  }
  return out;
}

}  // namespace raresobol::analytic
