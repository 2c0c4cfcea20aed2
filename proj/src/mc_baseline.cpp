#include "raresobol/mc_baseline.hpp"

#include <algorithm>
#include <cmath>

#include "raresobol/errors.hpp"

namespace raresobol {

std::optional<double> mc_cov(double p, std::size_t n) {
  if (n == 0) throw DomainError("mc_cov: n must be >= 1");
  if (p <= 0.0) return std::nullopt;
  return std::sqrt((1.0 - p) / (static_cast<double>(n) * p));
}

MCEstimate mc_probability(const Qoi& qoi, const InputSampler& law, std::size_t n,
                          double tau, RandomStream& stream) {
  if (n == 0) throw DomainError("mc_probability: n must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> theta = law(stream);
    if (qoi(theta) > tau) ++hits;
  }
  MCEstimate est;
  est.n_samples = n;
  est.n_evals = n;
  est.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  est.cov_hat = mc_cov(est.p_hat, n);
  return est;
}

std::uint64_t mc_samples_for_cov(double p, double delta) {
  if (!(p > 0.0 && p <= 1.0) || !(delta > 0.0)) {
    throw DomainError("mc_samples_for_cov: need p in (0,1] and delta > 0");
  }
  // Shave a few ulps so that exact products such as 1e8 are not pushed up.
  const double n = 1.0 / (delta * delta * p);
  return static_cast<std::uint64_t>(std::ceil(n * (1.0 - 1e-12)));
}

double cov_bound(double mean) {
  if (!(mean > 0.0 && mean < 1.0)) {
    throw DomainError("cov_bound: mean must lie in (0,1)");
  }
  return std::sqrt((1.0 - mean) / mean);
}

EnsembleMoments ensemble_moments(std::span<const double> values) {
  if (values.empty()) throw DomainError("ensemble_moments: empty ensemble");
  EnsembleMoments m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  for (double v : values) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= static_cast<double>(values.size());
  if (m.mean != 0.0) m.cov = std::sqrt(m.variance) / std::abs(m.mean);
  return m;
}

SaltelliReport SaltelliReport::clipped() const {
  SaltelliReport out = *this;
  auto clip = [](double& v) { v = std::clamp(v, 0.0, 1.0); };
  std::ranges::for_each(out.first_order, clip);
  std::ranges::for_each(out.total, clip);
  return out;
}

std::size_t saltelli_base_size(std::size_t budget, std::size_t dim) {
  return budget / (dim + 2);
}

SaltelliReport saltelli_sobol(const Qoi& f, const UniformBox& box,
                              std::size_t n_base, RandomStream& stream,
                              DesignKind design) {
  if (n_base < 2) throw DomainError("saltelli_sobol: n_base must be >= 2");
  const std::size_t dim = box.dim();
  auto draw = [&] {
    return design == DesignKind::latin_hypercube
               ? lhs_sample(box, n_base, stream)
               : uniform_box_sample(box, n_base, stream);
  };
  const Matrix a = draw();
  const Matrix b = draw();

  std::vector<double> fa(n_base), fb(n_base);
  std::vector<double> row(dim);
  auto eval_row = [&](const Matrix& m, std::size_t r) {
    for (std::size_t j = 0; j < dim; ++j) row[j] = m(r, j);
    return f(row);
  };
  for (std::size_t r = 0; r < n_base; ++r) {
    fa[r] = eval_row(a, r);
    fb[r] = eval_row(b, r);
  }

  double mean = 0.0;
  for (std::size_t r = 0; r < n_base; ++r) mean += fa[r] + fb[r];
  mean /= 2.0 * static_cast<double>(n_base);
  double var = 0.0;
  for (std::size_t r = 0; r < n_base; ++r) {
    var += (fa[r] - mean) * (fa[r] - mean) + (fb[r] - mean) * (fb[r] - mean);
  }
  var /= 2.0 * static_cast<double>(n_base) - 1.0;
  if (!(var > 0.0)) {
    throw UndefinedIndicesError("saltelli_sobol: f has zero sample variance");
  }

  SaltelliReport rep;
  rep.variance = var;
  rep.first_order.resize(dim);
  rep.total.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    double sum_first = 0.0, sum_total = 0.0;
    for (std::size_t r = 0; r < n_base; ++r) {
      for (std::size_t j = 0; j < dim; ++j) row[j] = (j == i) ? b(r, j) : a(r, j);
      const double fab = f(row);
      sum_first += (fb[r] - fab) * (fb[r] - fab);
      sum_total += (fa[r] - fab) * (fa[r] - fab);
    }
    const double n = static_cast<double>(n_base);
    rep.first_order[i] = (var - 0.5 * sum_first / n) / var;
    rep.total[i] = 0.5 * sum_total / n / var;
  }
  rep.n_evals = n_base * (dim + 2);
  return rep;
}

}  // namespace raresobol
