#include "raresobol/pce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "raresobol/errors.hpp"

namespace raresobol {
namespace {

constexpr const char* kFormatTag = "raresobol.pce";
constexpr const char* kOrderingTag = "graded-descending-lex";
constexpr double kBoxSlack = 1e-12;

void append_indices(std::size_t dim, unsigned degree, std::size_t pos,
                    std::vector<unsigned>& cur, std::vector<MultiIndex>& out) {
  if (pos + 1 == dim) {
    cur[pos] = degree;
    out.push_back(MultiIndex{cur});
    return;
  }
  for (unsigned d = degree + 1; d-- > 0;) {
    cur[pos] = d;
    append_indices(dim, degree - d, pos + 1, cur, out);
  }
}

double objective_value(const Matrix& gram, const Vector& b, double yy, const Vector& beta) {
  return yy - 2.0 * b.dot(beta) + beta.dot(gram * beta);
}

double frank_wolfe_gap(const Vector& grad, const Vector& beta, double lambda) {
  return grad.dot(beta) + lambda * grad.cwiseAbs().maxCoeff();
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_string(PolyFamily f) {
  return f == PolyFamily::legendre ? "legendre" : "hermite";
}

PolyFamily poly_family_from_string(const std::string& s) {
  if (s == "legendre") return PolyFamily::legendre;
  if (s == "hermite") return PolyFamily::hermite;
  throw DomainError("unknown polynomial family '" + s + "'");
}

unsigned MultiIndex::total_order() const {
  return std::accumulate(orders.begin(), orders.end(), 0U);
}

std::size_t total_order_size(std::size_t dim, unsigned order) {
  // C(dim + r, r) built incrementally; each partial product is itself a
  // binomial coefficient, so the division is exact.
  std::size_t c = 1;
  for (unsigned k = 1; k <= order; ++k) {
    const std::size_t factor = dim + k;
    if (c > std::numeric_limits<std::size_t>::max() / factor) {
      throw SizeError("total_order_size: basis count overflows");
    }
    c = c * factor / k;
  }
  return c;
}

std::vector<MultiIndex> total_order_basis(std::size_t dim, unsigned order) {
  if (dim == 0) throw DomainError("total_order_basis: dimension must be >= 1");
  const std::size_t count = total_order_size(dim, order);
  if (count > (std::size_t{1} << 26)) throw SizeError("total_order_basis: basis too large");
  std::vector<MultiIndex> out;
  out.reserve(count);
  std::vector<unsigned> cur(dim, 0);
  for (unsigned degree = 0; degree <= order; ++degree) {
    append_indices(dim, degree, 0, cur, out);
  }
  return out;
}

void univariate_values(PolyFamily family, double x, unsigned max_order,
                       std::span<double> out) {
  out[0] = 1.0;
  if (max_order == 0) return;
  out[1] = x;
  if (family == PolyFamily::legendre) {
    for (unsigned n = 1; n < max_order; ++n) {
      out[n + 1] = ((2.0 * n + 1.0) * x * out[n] - n * out[n - 1]) / (n + 1.0);
    }
    for (unsigned n = 1; n <= max_order; ++n) out[n] *= std::sqrt(2.0 * n + 1.0);
  } else {
    for (unsigned n = 1; n < max_order; ++n) {
      out[n + 1] = x * out[n] - n * out[n - 1];
    }
    double fact = 1.0;
    for (unsigned n = 1; n <= max_order; ++n) {
      fact *= n;
      out[n] /= std::sqrt(fact);
    }
  }
}

namespace {

double to_reference(double xi, const UniformBox& box, std::size_t i, PolyFamily family) {
  if (family == PolyFamily::hermite) return xi;
  const double w = box.width(i);
  const double t = 2.0 * (xi - box.lower()[i]) / w - 1.0;
  if (!(t >= -1.0 - kBoxSlack && t <= 1.0 + kBoxSlack)) {
    throw DomainError("eval_basis: coordinate " + std::to_string(i) + " outside the box");
  }
  return std::clamp(t, -1.0, 1.0);
}

void check_family(std::span<const PolyFamily> family, std::size_t dim) {
  if (family.size() != dim) {
    throw DomainError("polynomial family list must have one entry per dimension");
  }
}

}  // namespace

double eval_basis(const MultiIndex& index, std::span<const double> xi,
                  const UniformBox& box, std::span<const PolyFamily> family) {
  const std::size_t dim = box.dim();
  check_family(family, dim);
  if (xi.size() != dim || index.orders.size() != dim) {
    throw DomainError("eval_basis: dimension mismatch");
  }
  std::vector<double> vals;
  double prod = 1.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double t = to_reference(xi[i], box, i, family[i]);
    const unsigned k = index.orders[i];
    if (k == 0) continue;
    vals.resize(k + 1);
    univariate_values(family[i], t, k, vals);
    prod *= vals[k];
  }
  return prod;
}

Matrix design_matrix(const Matrix& samples, std::span<const MultiIndex> basis,
                     const UniformBox& box, std::span<const PolyFamily> family) {
  if (basis.empty()) throw DomainError("design_matrix: empty basis");
  const std::size_t dim = box.dim();
  check_family(family, dim);
  if (static_cast<std::size_t>(samples.cols()) != dim) {
    throw DomainError("design_matrix: sample width does not match the box");
  }
  unsigned max_order = 0;
  for (const auto& mi : basis) {
    if (mi.orders.size() != dim) throw DomainError("design_matrix: multi-index size mismatch");
    for (unsigned k : mi.orders) max_order = std::max(max_order, k);
  }
  const auto n = static_cast<std::size_t>(samples.rows());
  Matrix out(n, basis.size());
  // table(i, k): degree-k polynomial in dimension i at the current row.
  Matrix table(dim, max_order + 1);
  std::vector<double> vals(max_order + 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim; ++i) {
      univariate_values(family[i], to_reference(samples(r, i), box, i, family[i]),
                        max_order, vals);
      for (unsigned k = 0; k <= max_order; ++k) table(i, k) = vals[k];
    }
    for (std::size_t c = 0; c < basis.size(); ++c) {
      double prod = 1.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const unsigned k = basis[c].orders[i];
        if (k != 0) prod *= table(i, k);
      }
      out(r, c) = prod;
    }
  }
  return out;
}

std::vector<double> project_l1_ball(std::span<const double> v, double radius) {
  if (!(radius > 0.0)) throw DomainError("project_l1_ball: radius must be > 0");
  double norm = 0.0;
  for (double x : v) norm += std::abs(x);
  std::vector<double> out(v.begin(), v.end());
  if (norm <= radius) return out;

  std::vector<double> mags(v.size());
  std::ranges::transform(v, mags.begin(), [](double x) { return std::abs(x); });
  std::ranges::sort(mags, std::greater<>());
  double cumsum = 0.0, shift = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (mags[j] - t > 0.0) shift = t;
  }
  double l1 = 0.0;
  for (double& x : out) {
    const double m = std::max(std::abs(x) - shift, 0.0);
    x = std::copysign(m, x);
    l1 += m;
  }
  if (l1 > radius) {
    const double scale = radius / l1;
    for (double& x : out) x *= scale;
  }
  return out;
}

SparseFit fit_sparse(const Matrix& design, std::span<const double> y, double lambda,
                     const SparseFitOptions& options) {
  const auto n = static_cast<std::size_t>(design.rows());
  const auto p = static_cast<std::size_t>(design.cols());
  if (n == 0 || p == 0) throw DomainError("fit_sparse: empty design");
  if (y.size() != n) throw DomainError("fit_sparse: response length does not match the design");
  if (!(lambda > 0.0)) throw DomainError("fit_sparse: lambda must be > 0");

  const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(n));
  const double yy = yv.squaredNorm();
  SparseFit fit;
  if (yy == 0.0) {
    fit.coeffs.assign(p, 0.0);
    if (options.record_objective) fit.objective_trace.push_back(0.0);
    return fit;
  }
  const double tol = options.tolerance * yy;

  Matrix gram = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const Vector b = design.transpose() * yv;
  auto gradient = [&](const Vector& beta) -> Vector { return 2.0 * (gram * beta - b); };

  // Unconstrained least squares: optimal whenever it is feasible.
  Vector ls;
  bool have_ls = false;
  if (n >= p) {
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12) {
      ls = ldlt.solve(b);
      have_ls = true;
    }
  }
  if (!have_ls) ls = design.completeOrthogonalDecomposition().solve(yv);

  // A feasible unconstrained minimiser is optimal; its gap is zero up to rounding.
  if (ls.lpNorm<1>() <= lambda) {
    fit.coeffs = to_std(ls);
    fit.objective = objective_value(gram, b, yy, ls);
    if (options.record_objective) fit.objective_trace.push_back(fit.objective);
    return fit;
  }

  // Monotone FISTA on the l1 ball.
  const double lipschitz =
      2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .maxCoeff();
  const double step = 1.0 / lipschitz;
  auto project = [&](const Vector& v) {
    const auto w = project_l1_ball(std::span<const double>(v.data(), p), lambda);
    return Vector(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(p)));
  };

  Vector x = project(ls);
  double fx = objective_value(gram, b, yy, x);
  Vector x_prev = x;
  Vector point = x;
  double t = 1.0;
  if (options.record_objective) fit.objective_trace.push_back(fx);

  double gap = frank_wolfe_gap(gradient(x), x, lambda);
  std::size_t it = 0;
  while (gap > tol && it < options.max_iterations) {
    ++it;
    const Vector z = project(point - step * gradient(point));
    const double fz = objective_value(gram, b, yy, z);
    x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    point = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;
    if (options.record_objective) fit.objective_trace.push_back(fx);
    gap = frank_wolfe_gap(gradient(x), x, lambda);
  }
  if (gap > tol) {
    throw NonConvergenceError("fit_sparse: iteration cap reached before tolerance",
                              to_std(x), gap);
  }
  fit.coeffs = to_std(x);
  fit.objective = fx;
  fit.duality_gap = gap;
  fit.iterations = it;
  return fit;
}

CrossValidation cross_validate_lambda(const Matrix& design, std::span<const double> y,
                                      RandomStream& stream, std::vector<double> grid,
                                      std::size_t folds) {
  const auto n = static_cast<std::size_t>(design.rows());
  if (folds < 2 || folds > n) throw DomainError("cross_validate_lambda: need 2 <= folds <= N");
  if (y.size() != n) throw DomainError("cross_validate_lambda: response length mismatch");
  const Eigen::Map<const Vector> yv(y.data(), static_cast<Eigen::Index>(n));

  if (grid.empty()) {
    const double top = design.completeOrthogonalDecomposition().solve(yv).lpNorm<1>();
    if (!(top > 0.0)) throw DomainError("cross_validate_lambda: zero response");
    for (int k = 0; k < 10; ++k) grid.push_back(top * std::pow(10.0, -3.0 + k / 3.0));
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[stream.uniform_index(i)]);

  CrossValidation cv;
  cv.grid = grid;
  cv.mean_squared_error.assign(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i) {
      (i % folds == f ? test : train).push_back(static_cast<Eigen::Index>(perm[i]));
    }
    const Matrix a_train = design(train, Eigen::all);
    const Matrix a_test = design(test, Eigen::all);
    const Vector y_train = yv(train);
    const Vector y_test = yv(test);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::vector<double> beta;
      try {
        beta = fit_sparse(a_train, std::span<const double>(y_train.data(), train.size()),
                          grid[g]).coeffs;
      } catch (const NonConvergenceError& e) {
        beta = e.best_iterate();
      }
      const Eigen::Map<const Vector> bv(beta.data(), static_cast<Eigen::Index>(beta.size()));
      cv.mean_squared_error[g] += (a_test * bv - y_test).squaredNorm() / static_cast<double>(n);
    }
  }
  const auto best = std::ranges::min_element(cv.mean_squared_error);
  cv.best_lambda = grid[static_cast<std::size_t>(best - cv.mean_squared_error.begin())];
  return cv;
}

double PCESurrogate::variance() const {
  double v = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (!basis[k].is_constant()) v += coeffs[k] * coeffs[k];
  }
  return v;
}

PCESurrogate fit_surrogate(const Matrix& samples, std::span<const double> y,
                           const UniformBox& box, std::vector<PolyFamily> family,
                           unsigned order, double lambda, const SparseFitOptions& options) {
  PCESurrogate s{box, std::move(family), order, total_order_basis(box.dim(), order), {}};
  const Matrix psi = design_matrix(samples, s.basis, s.box, s.family);
  s.coeffs = fit_sparse(psi, y, lambda, options).coeffs;
  return s;
}

double evaluate(const PCESurrogate& surrogate, std::span<const double> xi) {
  if (surrogate.basis.size() != surrogate.coeffs.size()) {
    throw DomainError("evaluate: basis and coefficient counts differ");
  }
  Matrix row(1, static_cast<Eigen::Index>(xi.size()));
  for (std::size_t i = 0; i < xi.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = xi[i];
  if (xi.size() != surrogate.dim()) throw DomainError("evaluate: dimension mismatch");
  const Matrix psi = design_matrix(row, surrogate.basis, surrogate.box, surrogate.family);
  double sum = 0.0;
  for (std::size_t k = 0; k < surrogate.coeffs.size(); ++k) {
    sum += surrogate.coeffs[k] * psi(0, static_cast<Eigen::Index>(k));
  }
  return sum;
}

std::string to_json(const PCESurrogate& s) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = 1;
  j["dim"] = s.dim();
  j["order"] = s.order;
  j["ordering"] = kOrderingTag;
  auto& fam = j["family"] = nlohmann::json::array();
  for (auto f : s.family) fam.push_back(to_string(f));
  j["box"] = {{"lower", s.box.lower()}, {"upper", s.box.upper()}};
  auto& basis = j["basis"] = nlohmann::json::array();
  for (const auto& mi : s.basis) basis.push_back(mi.orders);
  j["coeffs"] = s.coeffs;
  return j.dump(2) + "\n";
}

PCESurrogate surrogate_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kFormatTag) {
      throw IoError("surrogate record: unexpected format tag");
    }
    if (j.at("ordering").get<std::string>() != kOrderingTag) {
      throw IoError("surrogate record: unsupported basis ordering");
    }
    UniformBox box(j.at("box").at("lower").get<std::vector<double>>(),
                   j.at("box").at("upper").get<std::vector<double>>());
    std::vector<PolyFamily> family;
    for (const auto& f : j.at("family")) family.push_back(poly_family_from_string(f.get<std::string>()));
    PCESurrogate s{std::move(box), std::move(family), j.at("order").get<unsigned>(), {}, {}};
    for (const auto& mi : j.at("basis")) s.basis.push_back(MultiIndex{mi.get<std::vector<unsigned>>()});
    s.coeffs = j.at("coeffs").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != s.dim() || s.family.size() != s.dim() ||
        s.coeffs.size() != s.basis.size() ||
        s.basis.size() != total_order_size(s.dim(), s.order)) {
      throw IoError("surrogate record: inconsistent sizes");
    }
    for (const auto& mi : s.basis) {
      if (mi.orders.size() != s.dim() || mi.total_order() > s.order) {
        throw IoError("surrogate record: malformed multi-index");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("surrogate record: ") + e.what());
  } catch (const DomainError& e) {
    throw IoError(std::string("surrogate record: ") + e.what());
  }
}

void save_surrogate(const PCESurrogate& surrogate, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(surrogate);
  if (!out) throw IoError("failed writing " + path);
}

PCESurrogate load_surrogate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return surrogate_from_json(ss.str());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace raresobol
