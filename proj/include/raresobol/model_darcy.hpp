#pragma once

// Steady single-phase Darcy flow on the unit square with a log-normal
// permeability built from a truncated Karhunen-Loeve expansion of a separable
// exponential covariance. The QoI is the time a particle released at the
// inflow boundary needs to reach the outflow boundary.
//
// Conventions: n x n cells of side h = 1/n; cell (i, j) has centre
// ((i + 1/2) h, (j + 1/2) h) and flat index j * n + i (row-major in y).
// Pressure is 1 on x = 0, 0 on x = 1; top and bottom are no-flux.

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "raresobol/mc_baseline.hpp"
#include "raresobol/sampling.hpp"

namespace raresobol::darcy {

class Grid {
 public:
  explicit Grid(std::size_t n);

  std::size_t n() const noexcept { return n_; }
  double h() const noexcept { return 1.0 / static_cast<double>(n_); }
  std::size_t cells() const noexcept { return n_ * n_; }
  double center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * h(); }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * n_ + i; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t n_;
};

struct DarcyHyper {
  double lx = 0.4;       // correlation length along x
  double ly = 0.4;       // correlation length along y
  double sigma_a = 0.8;  // log-permeability amplitude

  void validate() const;
  std::vector<double> to_xi() const { return {lx, ly, sigma_a}; }
  static DarcyHyper from_xi(std::span<const double> xi);
};

struct EnergyTarget {
  double fraction = 0.9;
};
struct FixedModes {
  std::size_t count = 0;
};
using KLETruncation = std::variant<EnergyTarget, FixedModes>;

struct KLEBasis {
  std::vector<double> eigenvalues;  // descending, > 0
  /// cells x n_kl; column k holds e_k at the cell centres, normalised so that
  /// h^2 sum_x e_k(x) e_l(x) = delta_kl.
  Matrix modes;
  std::size_t n_kl = 0;
  double energy_fraction = 0.0;  // retained eigenvalue mass over the trace
  double trace = 0.0;            // sum of all discrete eigenvalues
};

/// Eigenpairs of the discretised covariance
/// exp(-|x1 - y1| / lx - |x2 - y2| / ly) from two 1-D eigenproblems with
/// cell-centre quadrature (weight h), tensorised and sorted descending.
KLEBasis kle_decompose(const DarcyHyper& hyper, const Grid& grid, KLETruncation target);

struct FieldRealization {
  Vector log_perm;
  Vector perm;
};

/// a = mean + sigma_a sum_k sqrt(lambda_k) theta_k e_k, perm = exp(a).
FieldRealization realize_log_perm(const KLEBasis& basis, std::span<const double> theta,
                                  const Vector& mean_field, double sigma_a);

/// Cell-centred five-point scheme with harmonic-mean face transmissibilities.
/// Throws LinearSolverError when the relative residual exceeds 1e-10.
Vector solve_pressure(const Grid& grid, const Vector& perm);

/// Face-normal Darcy velocities on the staggered grid.
struct Velocity {
  Grid grid{4};
  Vector u;  // x-faces: (n + 1) per row, index j * (n + 1) + i, face at x = i h
  Vector v;  // y-faces: n per row, index j * n + i, face at y = j h

  double u_face(std::size_t i, std::size_t j) const { return u[static_cast<Eigen::Index>(j * (grid.n() + 1) + i)]; }
  double v_face(std::size_t i, std::size_t j) const { return v[static_cast<Eigen::Index>(j * grid.n() + i)]; }

  /// Bilinear interpolation of each component from its own face lattice.
  std::array<double, 2> at(double x, double y) const;

  double inflow() const;   // flux through x = 0
  double outflow() const;  // flux through x = 1
  /// Largest |net outward flux| over all cells.
  double max_divergence() const;
};

Velocity darcy_velocity(const Grid& grid, const Vector& perm, const Vector& pressure);

struct TrackingOptions {
  double t_cap = 100.0;
  double step_fraction = 0.1;  // step = min(step_fraction * h / |v|, t_cap / 1e6)
};

struct HittingTime {
  double time = 0.0;
  bool censored = false;  // no exit before t_cap; time == t_cap
  std::size_t steps = 0;
};

/// RK4 particle tracking from x0 until x_1 = 1, the crossing time being
/// interpolated linearly within the last step.
HittingTime hitting_time(const Velocity& velocity, std::array<double, 2> x0,
                         const TrackingOptions& options = {});

/// Immutable per-hyper-parameter state shared by all QoI evaluations.
struct DarcyContext {
  Grid grid{25};
  DarcyHyper hyper;
  KLEBasis basis;
  Vector mean_field;
  TrackingOptions tracking;
  std::array<double, 2> x0{0.0, 0.5};
};

/// Number of modes holding `fraction` of the variance at the given
/// (smallest) correlation lengths.
std::size_t modes_for_energy(const Grid& grid, double lx, double ly, double fraction = 0.9);

DarcyContext make_context(const DarcyHyper& hyper, const Grid& grid, std::size_t n_kl,
                          std::optional<Vector> mean_field = std::nullopt,
                          TrackingOptions tracking = {});

double qoi_darcy(std::span<const double> theta, const DarcyContext& ctx);

/// Hitting time as a function of the standard-normal KLE coordinates.
Qoi make_qoi(std::shared_ptr<const DarcyContext> ctx);

/// Mean-field grid file: first token n, then n^2 row-major values.
Vector load_mean_field(const std::string& path, const Grid& grid);
void save_mean_field(const std::string& path, const Grid& grid, const Vector& field);

/// Long-format CSV "x,y,value" at cell centres.
void write_cell_csv(const std::string& path, const Grid& grid, const Vector& field);
/// CSV "x,y,vx,vy" with face velocities averaged to cell centres.
void write_velocity_csv(const std::string& path, const Velocity& velocity);

}  // namespace raresobol::darcy
