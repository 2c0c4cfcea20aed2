#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raresobol/sampling.hpp"

namespace raresobol {

/// Univariate orthonormal polynomial families.
/// Legendre: uniform law on the box side, mapped affinely to [-1, 1].
/// Hermite: standard normal law (probabilists' polynomials over sqrt(n!)).
enum class PolyFamily { legendre, hermite };

std::string to_string(PolyFamily f);
PolyFamily poly_family_from_string(const std::string& s);

struct MultiIndex {
  std::vector<unsigned> orders;

  unsigned total_order() const;
  bool is_constant() const { return total_order() == 0; }
  bool operator==(const MultiIndex&) const = default;
};

/// Number of multi-indices of total order <= r in M variables,
/// (M + r)! / (M! r!). Throws SizeError on overflow.
std::size_t total_order_size(std::size_t dim, unsigned order);

/// All multi-indices with total order <= r, graded: ascending total order,
/// and within one order descending lexicographic ((2,0), (1,1), (0,2)).
std::vector<MultiIndex> total_order_basis(std::size_t dim, unsigned order);

/// Orthonormal univariate polynomials of degree 0..max_order at x.
/// Legendre expects x in [-1, 1].
void univariate_values(PolyFamily family, double x, unsigned max_order,
                       std::span<double> out);

/// Product of orthonormal univariate polynomials for one multi-index.
double eval_basis(const MultiIndex& index, std::span<const double> xi,
                  const UniformBox& box, std::span<const PolyFamily> family);

/// Rows: samples; columns: basis terms.
Matrix design_matrix(const Matrix& samples, std::span<const MultiIndex> basis,
                     const UniformBox& box, std::span<const PolyFamily> family);

struct SparseFitOptions {
  double tolerance = 1e-8;  // duality gap relative to ||y||^2
  std::size_t max_iterations = 200000;
  bool record_objective = false;
};

struct SparseFit {
  std::vector<double> coeffs;
  double objective = 0.0;     // ||y - Psi beta||^2
  double duality_gap = 0.0;   // upper bound on objective - optimum
  std::size_t iterations = 0; // first-order iterations (0 when the
                              // unconstrained solution is feasible)
  std::vector<double> objective_trace;
};

/// min ||y - Psi beta||^2 subject to ||beta||_1 <= lambda.
///
/// If the minimum-norm least-squares solution is feasible it is optimal and
/// returned directly. Otherwise a monotone accelerated projected-gradient
/// method (projection onto the l1 ball by sort and threshold) runs from the
/// projected least-squares point until the Frank-Wolfe duality gap
/// g'beta + lambda ||g||_inf drops below tolerance * ||y||^2. Throws
/// NonConvergenceError carrying the best iterate on hitting the cap.
SparseFit fit_sparse(const Matrix& design, std::span<const double> y, double lambda,
                     const SparseFitOptions& options = {});

/// Euclidean projection onto {x : ||x||_1 <= radius}.
std::vector<double> project_l1_ball(std::span<const double> v, double radius);

/// k-fold cross-validated choice of lambda from a grid. An empty grid uses
/// 10 log-spaced values from 1e-3 to 1 times ||beta_ls||_1.
struct CrossValidation {
  double best_lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> mean_squared_error;
};
CrossValidation cross_validate_lambda(const Matrix& design, std::span<const double> y,
                                      RandomStream& stream, std::vector<double> grid = {},
                                      std::size_t folds = 5);

struct PCESurrogate {
  UniformBox box;
  std::vector<PolyFamily> family;
  unsigned order = 0;
  std::vector<MultiIndex> basis;
  std::vector<double> coeffs;

  std::size_t dim() const { return box.dim(); }
  double mean() const { return coeffs.empty() ? 0.0 : coeffs.front(); }
  double variance() const;
};

/// Total-order surrogate fitted by fit_sparse on (samples, y).
PCESurrogate fit_surrogate(const Matrix& samples, std::span<const double> y,
                           const UniformBox& box, std::vector<PolyFamily> family,
                           unsigned order, double lambda,
                           const SparseFitOptions& options = {});

double evaluate(const PCESurrogate& surrogate, std::span<const double> xi);

/// Self-describing JSON record; coefficients round-trip bit-exactly.
std::string to_json(const PCESurrogate& surrogate);
PCESurrogate surrogate_from_json(const std::string& text);
void save_surrogate(const PCESurrogate& surrogate, const std::string& path);
PCESurrogate load_surrogate(const std::string& path);

}  // namespace raresobol
