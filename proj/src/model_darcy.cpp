#include "raresobol/model_darcy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <Eigen/Sparse>

#include "raresobol/errors.hpp"

namespace raresobol::darcy {
namespace {

using Index = Eigen::Index;

struct Eigen1D {
  Vector values;   // descending
  Matrix vectors;  // columns, unit l2 norm
};

Eigen1D covariance_eigen_1d(const Grid& grid, double length) {
  const auto n = static_cast<Index>(grid.n());
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double d = std::abs(grid.center(static_cast<std::size_t>(i)) -
                                grid.center(static_cast<std::size_t>(j)));
      c(i, j) = std::exp(-d / length) * grid.h();
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  if (es.info() != Eigen::Success) throw NumericalError("kle_decompose: eigensolver failed");
  Eigen1D out{es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
  for (Index k = 0; k < n; ++k) {
    // Deterministic sign: first entry non-negative.
    if (out.vectors(0, k) < 0.0) out.vectors.col(k) *= -1.0;
  }
  return out;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

void check_field(const Grid& grid, const Vector& f, const char* what) {
  if (static_cast<std::size_t>(f.size()) != grid.cells()) {
    throw DomainError(std::string(what) + ": field size does not match the grid");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  return out;
}

}  // namespace

Grid::Grid(std::size_t n) : n_(n) {
  if (n < 4) throw DomainError("Grid: need at least 4 cells per side");
}

void DarcyHyper::validate() const {
  if (!(lx > 0.0) || !(ly > 0.0)) throw DomainError("DarcyHyper: correlation lengths must be > 0");
  if (!(sigma_a >= 0.0)) throw DomainError("DarcyHyper: sigma_a must be >= 0");
}

DarcyHyper DarcyHyper::from_xi(std::span<const double> xi) {
  if (xi.size() != 3) throw DomainError("DarcyHyper::from_xi: expected (lx, ly, sigma_a)");
  DarcyHyper h{xi[0], xi[1], xi[2]};
  h.validate();
  return h;
}

KLEBasis kle_decompose(const DarcyHyper& hyper, const Grid& grid, KLETruncation target) {
  hyper.validate();
  const Eigen1D ex = covariance_eigen_1d(grid, hyper.lx);
  const Eigen1D ey = covariance_eigen_1d(grid, hyper.ly);
  for (const Vector* vals : {&ex.values, &ey.values}) {
    if (vals->minCoeff() < -1e-10 * vals->maxCoeff()) {
      throw NumericalError("kle_decompose: covariance has a negative eigenvalue");
    }
  }

  const std::size_t n = grid.n();
  struct Pair {
    double value;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = ex.values[static_cast<Index>(a)] * ey.values[static_cast<Index>(b)];
      if (v > 0.0) pairs.push_back({v, a, b});
    }
  }
  std::ranges::sort(pairs, [](const Pair& l, const Pair& r) {
    if (l.value != r.value) return l.value > r.value;
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });

  KLEBasis basis;
  basis.trace = ex.values.sum() * ey.values.sum();
  std::size_t keep = 0;
  if (const auto* e = std::get_if<EnergyTarget>(&target)) {
    if (!(e->fraction > 0.0 && e->fraction <= 1.0)) {
      throw DomainError("kle_decompose: energy fraction must lie in (0,1]");
    }
    double acc = 0.0;
    while (keep < pairs.size() && acc < e->fraction * basis.trace) acc += pairs[keep++].value;
  } else {
    keep = std::get<FixedModes>(target).count;
    if (keep == 0 || keep > pairs.size()) {
      throw DomainError("kle_decompose: fixed mode count out of range");
    }
  }

  basis.n_kl = keep;
  basis.eigenvalues.resize(keep);
  basis.modes.resize(static_cast<Index>(grid.cells()), static_cast<Index>(keep));
  double retained = 0.0;
  const double inv_h = 1.0 / grid.h();
  for (std::size_t k = 0; k < keep; ++k) {
    const Pair& p = pairs[k];
    basis.eigenvalues[k] = p.value;
    retained += p.value;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        basis.modes(static_cast<Index>(grid.index(i, j)), static_cast<Index>(k)) =
            ex.vectors(static_cast<Index>(i), static_cast<Index>(p.a)) *
            ey.vectors(static_cast<Index>(j), static_cast<Index>(p.b)) * inv_h;
      }
    }
  }
  basis.energy_fraction = retained / basis.trace;
  return basis;
}

FieldRealization realize_log_perm(const KLEBasis& basis, std::span<const double> theta,
                                  const Vector& mean_field, double sigma_a) {
  if (theta.size() != basis.n_kl) {
    throw DomainError("realize_log_perm: theta length must equal n_kl");
  }
  if (mean_field.size() != basis.modes.rows()) {
    throw DomainError("realize_log_perm: mean field size does not match the modes");
  }
  Vector weights(static_cast<Index>(basis.n_kl));
  for (std::size_t k = 0; k < basis.n_kl; ++k) {
    weights[static_cast<Index>(k)] = std::sqrt(basis.eigenvalues[k]) * theta[k];
  }
  FieldRealization f;
  f.log_perm = mean_field + sigma_a * (basis.modes * weights);
  f.perm = f.log_perm.array().exp();
  return f;
}

Vector solve_pressure(const Grid& grid, const Vector& perm) {
  check_field(grid, perm, "solve_pressure");
  if (!(perm.minCoeff() > 0.0) || !perm.allFinite()) {
    throw DomainError("solve_pressure: permeability must be positive and finite");
  }
  const std::size_t n = grid.n();
  const auto cells = static_cast<Index>(grid.cells());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(5 * grid.cells());
  Vector rhs = Vector::Zero(cells);
  Vector diag = Vector::Zero(cells);
  auto k = [&](std::size_t i, std::size_t j) { return perm[static_cast<Index>(grid.index(i, j))]; };

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Index>(grid.index(i, j));
      if (i + 1 < n) {
        const double t = harmonic(k(i, j), k(i + 1, j));
        const auto e = static_cast<Index>(grid.index(i + 1, j));
        diag[c] += t;
        diag[e] += t;
        trips.emplace_back(c, e, -t);
        trips.emplace_back(e, c, -t);
      }
      if (j + 1 < n) {
        const double t = harmonic(k(i, j), k(i, j + 1));
        const auto nn = static_cast<Index>(grid.index(i, j + 1));
        diag[c] += t;
        diag[nn] += t;
        trips.emplace_back(c, nn, -t);
        trips.emplace_back(nn, c, -t);
      }
    }
    // Dirichlet faces sit half a cell from the centre.
    const double tl = 2.0 * k(0, j);
    diag[static_cast<Index>(grid.index(0, j))] += tl;
    rhs[static_cast<Index>(grid.index(0, j))] += tl * 1.0;
    diag[static_cast<Index>(grid.index(n - 1, j))] += 2.0 * k(n - 1, j);
  }
  for (Index c = 0; c < cells; ++c) trips.emplace_back(c, c, diag[c]);

  Eigen::SparseMatrix<double> a(cells, cells);
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) {
    throw LinearSolverError("solve_pressure: factorisation failed", std::nan(""));
  }
  Vector p = solver.solve(rhs);
  const double residual = (a * p - rhs).norm() / rhs.norm();
  if (!(residual <= 1e-10)) {
    throw LinearSolverError("solve_pressure: residual " + std::to_string(residual) +
                                " above tolerance",
                            residual);
  }
  return p;
}

Velocity darcy_velocity(const Grid& grid, const Vector& perm, const Vector& pressure) {
  check_field(grid, perm, "darcy_velocity");
  check_field(grid, pressure, "darcy_velocity");
  const std::size_t n = grid.n();
  const double h = grid.h();
  Velocity vel;
  vel.grid = grid;
  vel.u = Vector::Zero(static_cast<Index>((n + 1) * n));
  vel.v = Vector::Zero(static_cast<Index>(n * (n + 1)));
  auto k = [&](std::size_t i, std::size_t j) { return perm[static_cast<Index>(grid.index(i, j))]; };
  auto p = [&](std::size_t i, std::size_t j) { return pressure[static_cast<Index>(grid.index(i, j))]; };

  for (std::size_t j = 0; j < n; ++j) {
    auto& u = vel.u;
    const auto row = static_cast<Index>(j * (n + 1));
    u[row] = 2.0 * k(0, j) * (1.0 - p(0, j)) / h;
    for (std::size_t i = 1; i < n; ++i) {
      u[row + static_cast<Index>(i)] = harmonic(k(i - 1, j), k(i, j)) * (p(i - 1, j) - p(i, j)) / h;
    }
    u[row + static_cast<Index>(n)] = 2.0 * k(n - 1, j) * (p(n - 1, j) - 0.0) / h;
  }
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      vel.v[static_cast<Index>(j * n + i)] =
          harmonic(k(i, j - 1), k(i, j)) * (p(i, j - 1) - p(i, j)) / h;
    }
  }
  return vel;
}

namespace {

// Linear interpolation weight along an axis whose samples sit at
// (idx + offset) * h, idx in [0, count), clamped at both ends.
std::pair<std::size_t, double> axis_weight(double coord, double h, double offset,
                                           std::size_t count) {
  const double g = coord / h - offset;
  if (!(g > 0.0)) return {0, 0.0};
  if (g >= static_cast<double>(count - 1)) return {count - 2, 1.0};
  const auto i0 = static_cast<std::size_t>(g);
  return {i0, g - static_cast<double>(i0)};
}

}  // namespace

std::array<double, 2> Velocity::at(double x, double y) const {
  const std::size_t n = grid.n();
  const double h = grid.h();
  // u lives at (i h, (j + 1/2) h): n + 1 columns, n rows.
  const auto [ui, ax] = axis_weight(x, h, 0.0, n + 1);
  const auto [uj, ay] = axis_weight(y, h, 0.5, n);
  const double u00 = u_face(ui, uj), u10 = u_face(ui + 1, uj);
  const double u01 = u_face(ui, uj + 1), u11 = u_face(ui + 1, uj + 1);
  const double uu = (1 - ay) * ((1 - ax) * u00 + ax * u10) + ay * ((1 - ax) * u01 + ax * u11);
  // v lives at ((i + 1/2) h, j h): n columns, n + 1 rows.
  const auto [vi, bx] = axis_weight(x, h, 0.5, n);
  const auto [vj, by] = axis_weight(y, h, 0.0, n + 1);
  const double v00 = v_face(vi, vj), v10 = v_face(vi + 1, vj);
  const double v01 = v_face(vi, vj + 1), v11 = v_face(vi + 1, vj + 1);
  const double vv = (1 - by) * ((1 - bx) * v00 + bx * v10) + by * ((1 - bx) * v01 + bx * v11);
  return {uu, vv};
}

double Velocity::inflow() const {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.n(); ++j) s += u_face(0, j) * grid.h();
  return s;
}

double Velocity::outflow() const {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.n(); ++j) s += u_face(grid.n(), j) * grid.h();
  return s;
}

double Velocity::max_divergence() const {
  double worst = 0.0;
  const double h = grid.h();
  for (std::size_t j = 0; j < grid.n(); ++j) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      const double div = (u_face(i + 1, j) - u_face(i, j)) * h + (v_face(i, j + 1) - v_face(i, j)) * h;
      worst = std::max(worst, std::abs(div));
    }
  }
  return worst;
}

HittingTime hitting_time(const Velocity& velocity, std::array<double, 2> x0,
                         const TrackingOptions& options) {
  if (!(options.t_cap > 0.0)) throw DomainError("hitting_time: t_cap must be > 0");
  if (!(x0[0] >= 0.0 && x0[0] <= 1.0 && x0[1] >= 0.0 && x0[1] <= 1.0)) {
    throw DomainError("hitting_time: start point outside the domain");
  }
  const double h = velocity.grid.h();
  const double max_step = options.t_cap / 1e6;
  auto field = [&](double x, double y) {
    const auto v = velocity.at(x, y);
    if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
      throw IntegrationError("hitting_time: non-finite velocity");
    }
    return v;
  };
  auto project = [](std::array<double, 2>& p) {
    p[0] = std::max(p[0], 0.0);
    p[1] = std::clamp(p[1], 0.0, 1.0);
  };

  HittingTime out;
  std::array<double, 2> x = x0;
  double t = 0.0;
  if (x[0] >= 1.0) return out;
  while (t < options.t_cap) {
    const auto k1 = field(x[0], x[1]);
    const double speed = std::hypot(k1[0], k1[1]);
    double dt = speed > 0.0 ? std::min(options.step_fraction * h / speed, max_step) : max_step;
    dt = std::min(dt, options.t_cap - t);

    const auto k2 = field(x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]);
    const auto k3 = field(x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]);
    const auto k4 = field(x[0] + dt * k3[0], x[1] + dt * k3[1]);
    std::array<double, 2> next{
        x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
    ++out.steps;
    if (next[0] >= 1.0) {
      out.time = t + dt * (1.0 - x[0]) / (next[0] - x[0]);
      return out;
    }
    project(next);
    x = next;
    t += dt;
  }
  out.time = options.t_cap;
  out.censored = true;
  return out;
}

std::size_t modes_for_energy(const Grid& grid, double lx, double ly, double fraction) {
  return kle_decompose(DarcyHyper{lx, ly, 1.0}, grid, EnergyTarget{fraction}).n_kl;
}

DarcyContext make_context(const DarcyHyper& hyper, const Grid& grid, std::size_t n_kl,
                          std::optional<Vector> mean_field, TrackingOptions tracking) {
  DarcyContext ctx;
  ctx.grid = grid;
  ctx.hyper = hyper;
  ctx.basis = kle_decompose(hyper, grid, FixedModes{n_kl});
  ctx.mean_field = mean_field ? std::move(*mean_field)
                              : Vector::Zero(static_cast<Index>(grid.cells()));
  check_field(grid, ctx.mean_field, "make_context");
  ctx.tracking = tracking;
  return ctx;
}

double qoi_darcy(std::span<const double> theta, const DarcyContext& ctx) {
  const FieldRealization f = realize_log_perm(ctx.basis, theta, ctx.mean_field, ctx.hyper.sigma_a);
  const Vector p = solve_pressure(ctx.grid, f.perm);
  const Velocity v = darcy_velocity(ctx.grid, f.perm, p);
  return hitting_time(v, ctx.x0, ctx.tracking).time;
}

Qoi make_qoi(std::shared_ptr<const DarcyContext> ctx) {
  return [ctx = std::move(ctx)](std::span<const double> theta) { return qoi_darcy(theta, *ctx); };
}

Vector load_mean_field(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read mean field " + path);
  std::size_t n = 0;
  if (!(in >> n)) throw IoError(path + ": missing grid size header");
  if (n != grid.n()) {
    throw IoError(path + ": grid size " + std::to_string(n) + " does not match " +
                  std::to_string(grid.n()));
  }
  Vector f(static_cast<Index>(grid.cells()));
  for (Index c = 0; c < f.size(); ++c) {
    if (!(in >> f[c])) throw IoError(path + ": expected " + std::to_string(grid.cells()) + " values");
  }
  return f;
}

void save_mean_field(const std::string& path, const Grid& grid, const Vector& field) {
  check_field(grid, field, "save_mean_field");
  auto out = open_out(path);
  out << grid.n() << '\n';
  for (std::size_t j = 0; j < grid.n(); ++j) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      out << field[static_cast<Index>(grid.index(i, j))] << (i + 1 < grid.n() ? ' ' : '\n');
    }
  }
}

void write_cell_csv(const std::string& path, const Grid& grid, const Vector& field) {
  check_field(grid, field, "write_cell_csv");
  auto out = open_out(path);
  out << "x,y,value\n";
  for (std::size_t j = 0; j < grid.n(); ++j) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      out << grid.center(i) << ',' << grid.center(j) << ','
          << field[static_cast<Index>(grid.index(i, j))] << '\n';
    }
  }
}

void write_velocity_csv(const std::string& path, const Velocity& velocity) {
  const Grid& g = velocity.grid;
  auto out = open_out(path);
  out << "x,y,vx,vy\n";
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) {
      out << g.center(i) << ',' << g.center(j) << ','
          << 0.5 * (velocity.u_face(i, j) + velocity.u_face(i + 1, j)) << ','
          << 0.5 * (velocity.v_face(i, j) + velocity.v_face(i, j + 1)) << '\n';
    }
  }
}

}  // namespace raresobol::darcy
