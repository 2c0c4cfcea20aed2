#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <vector>

#include "raresobol/errors.hpp"
#include "raresobol/model_darcy.hpp"

using namespace raresobol;
using namespace raresobol::darcy;
using Index = Eigen::Index;

namespace {

Vector constant(const Grid& g, double v) { return Vector::Constant(static_cast<Index>(g.cells()), v); }

std::vector<double> normals(std::size_t n, RandomStream& s) {
  std::vector<double> t(n);
  for (double& x : t) x = standard_normal(s);
  return t;
}

Vector smooth_perm(const Grid& g) {
  Vector k(static_cast<Index>(g.cells()));
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double x = g.center(i), y = g.center(j);
      k[static_cast<Index>(g.index(i, j))] = std::exp(0.5 * std::sin(2.0 * M_PI * x) * std::cos(M_PI * y));
    }
  return k;
}

}  // namespace

TEST(Grid, Conventions) {
  const Grid g(8);
  EXPECT_EQ(g.cells(), 64u);
  EXPECT_DOUBLE_EQ(g.h(), 0.125);
  EXPECT_DOUBLE_EQ(g.center(0), 0.0625);
  EXPECT_EQ(g.index(3, 2), 19u);
  EXPECT_THROW(Grid(3), DomainError);
}

TEST(DarcyHyper, Validation) {
  EXPECT_NO_THROW((DarcyHyper{0.4, 0.4, 0.0}.validate()));
  EXPECT_THROW((DarcyHyper{0.0, 0.4, 0.8}.validate()), DomainError);
  EXPECT_THROW((DarcyHyper{0.4, -1.0, 0.8}.validate()), DomainError);
  EXPECT_THROW((DarcyHyper{0.4, 0.4, -0.1}.validate()), DomainError);
  const DarcyHyper h = DarcyHyper::from_xi(std::vector<double>{0.3, 0.5, 0.7});
  EXPECT_EQ(h.to_xi(), (std::vector<double>{0.3, 0.5, 0.7}));
}

TEST(Kle, TraceIdentityAndOrdering) {
  const Grid g(20);
  const KLEBasis b = kle_decompose({0.3, 0.5, 1.0}, g, FixedModes{g.cells()});
  // Unit variance at every cell centre, weighted by h^2, sums to 1.
  const double oracle = static_cast<double>(g.cells()) * g.h() * g.h();
  EXPECT_NEAR(std::accumulate(b.eigenvalues.begin(), b.eigenvalues.end(), 0.0), oracle, 1e-8);
  EXPECT_NEAR(b.trace, oracle, 1e-8);
  for (std::size_t k = 0; k < b.n_kl; ++k) {
    EXPECT_GT(b.eigenvalues[k], 0.0);
    if (k > 0) EXPECT_LE(b.eigenvalues[k], b.eigenvalues[k - 1]);
  }
}

TEST(Kle, ModesAreOrthonormal) {
  const Grid g(25);
  const KLEBasis b = kle_decompose({0.4, 0.4, 0.8}, g, EnergyTarget{0.9});
  const Matrix gram = b.modes.transpose() * b.modes * (g.h() * g.h());
  EXPECT_LT((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(static_cast<std::size_t>(b.modes.cols()), b.n_kl);
}

TEST(Kle, EnergyTargetIsMinimal) {
  for (std::size_t n : {10u, 25u, 50u}) {
    const Grid g(n);
    const KLEBasis b = kle_decompose({0.4, 0.4, 0.8}, g, EnergyTarget{0.9});
    EXPECT_GE(b.energy_fraction, 0.9);
    const double without_last =
        std::accumulate(b.eigenvalues.begin(), b.eigenvalues.end() - 1, 0.0) / b.trace;
    EXPECT_LT(without_last, 0.9);
    EXPECT_EQ(modes_for_energy(g, 0.4, 0.4, 0.9), b.n_kl);
  }
}

TEST(Kle, LongCorrelationGivesConstantLeadingMode) {
  const Grid g(25);
  const KLEBasis b = kle_decompose({1e3, 1e3, 1.0}, g, FixedModes{5});
  EXPECT_GT(b.eigenvalues[0] / b.trace, 0.99);
  EXPECT_LT((b.modes.col(0).array().abs() - 1.0).abs().maxCoeff(), 0.01);
}

TEST(Realize, TrivialCases) {
  const Grid g(10);
  const KLEBasis b = kle_decompose({0.4, 0.4, 0.8}, g, FixedModes{12});
  Vector mean(static_cast<Index>(g.cells()));
  for (Index k = 0; k < mean.size(); ++k) mean[k] = 0.01 * static_cast<double>(k);
  const FieldRealization zero = realize_log_perm(b, std::vector<double>(12, 0.0), mean, 0.8);
  EXPECT_EQ(zero.log_perm, mean);
  RandomStream s(1, 0);
  const FieldRealization det = realize_log_perm(b, normals(12, s), mean, 0.0);
  EXPECT_EQ(det.log_perm, mean);
  const FieldRealization r = realize_log_perm(b, normals(12, s), mean, 0.8);
  EXPECT_TRUE((r.perm.array() > 0.0).all());
  EXPECT_LT((r.perm.array().log() - r.log_perm.array()).abs().maxCoeff(), 1e-12);
  EXPECT_THROW(realize_log_perm(b, std::vector<double>(11, 0.0), mean, 0.8), DomainError);
}

TEST(Realize, PointwiseVarianceMatchesTruncatedCovariance) {
  const Grid g(25);
  const double sigma = 0.8;
  const KLEBasis b = kle_decompose({0.4, 0.4, sigma}, g, EnergyTarget{0.9});
  const Vector mean = constant(g, 0.0);
  RandomStream s(2, 0);
  const std::size_t draws = 10000;
  const std::vector<std::size_t> probe{g.index(3, 3), g.index(12, 3), g.index(21, 3),
                                       g.index(3, 12), g.index(12, 12), g.index(21, 12),
                                       g.index(3, 21), g.index(12, 21), g.index(21, 21)};
  std::vector<double> sum2(probe.size(), 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const FieldRealization r = realize_log_perm(b, normals(b.n_kl, s), mean, sigma);
    for (std::size_t k = 0; k < probe.size(); ++k) sum2[k] += r.log_perm[static_cast<Index>(probe[k])] * r.log_perm[static_cast<Index>(probe[k])];
  }
  for (std::size_t k = 0; k < probe.size(); ++k) {
    double oracle = 0.0;
    for (std::size_t m = 0; m < b.n_kl; ++m) {
      const double e = b.modes(static_cast<Index>(probe[k]), static_cast<Index>(m));
      oracle += b.eigenvalues[m] * e * e;
    }
    oracle *= sigma * sigma;
    EXPECT_NEAR(sum2[k] / draws, oracle, 0.05 * oracle) << "cell " << probe[k];
  }
}

TEST(Pressure, ConstantPermeabilityIsLinear) {
  const Grid g(16);
  for (double c : {1.0, 0.01, 250.0}) {
    const Vector p = solve_pressure(g, constant(g, c));
    for (std::size_t j = 0; j < g.n(); ++j)
      for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(p[static_cast<Index>(g.index(i, j))], 1.0 - g.center(i), 1e-8);
  }
}

TEST(Pressure, LayeredSeriesResistance) {
  const Grid g(20);
  const double k1 = 3.0, k2 = 0.25;
  Vector k(static_cast<Index>(g.cells()));
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i) k[static_cast<Index>(g.index(i, j))] = g.center(i) < 0.5 ? k1 : k2;
  const double resistance = 0.5 / k1 + 0.5 / k2;
  const double flux = 1.0 / resistance;
  const auto exact = [&](double x) { return x < 0.5 ? 1.0 - flux * x / k1 : flux * (1.0 - x) / k2; };
  const Vector p = solve_pressure(g, k);
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(p[static_cast<Index>(g.index(i, j))], exact(g.center(i)), 1e-6);
  // midline value from the last cell of the first layer
  const std::size_t left = g.n() / 2 - 1;
  const double midline = p[static_cast<Index>(g.index(left, 7))] - flux * 0.5 * g.h() / k1;
  EXPECT_NEAR(midline, 1.0 - 0.5 * flux / k1, 1e-6);
  const Velocity v = darcy_velocity(g, k, p);
  for (std::size_t j = 0; j < g.n(); ++j)
    for (std::size_t i = 0; i <= g.n(); ++i) EXPECT_NEAR(v.u_face(i, j), flux, 1e-8);
}

TEST(Pressure, RandomFieldsConserveMassAndObeyMaximumPrinciple) {
  const Grid g(16);
  const DarcyHyper h{0.3, 0.5, 1.5};
  const KLEBasis b = kle_decompose(h, g, EnergyTarget{0.9});
  const Vector mean = constant(g, 0.0);
  RandomStream s(3, 0);
  for (int r = 0; r < 100; ++r) {
    const FieldRealization f = realize_log_perm(b, normals(b.n_kl, s), mean, h.sigma_a);
    const Vector p = solve_pressure(g, f.perm);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
    const Velocity v = darcy_velocity(g, f.perm, p);
    EXPECT_GT(v.inflow(), 0.0);
    EXPECT_LT(std::abs(v.inflow() - v.outflow()) / v.inflow(), 1e-8);
    EXPECT_LT(v.max_divergence() / v.inflow(), 1e-8);
    for (std::size_t i = 0; i < g.n(); ++i) {
      EXPECT_EQ(v.v_face(i, 0), 0.0);
      EXPECT_EQ(v.v_face(i, g.n()), 0.0);
    }
  }
}

TEST(Pressure, SelfConvergenceIsSecondOrder) {
  const auto coarse_error = [](std::size_t n) {
    const Grid c(n), f(2 * n);
    const Vector pc = solve_pressure(c, smooth_perm(c));
    const Vector pf = solve_pressure(f, smooth_perm(f));
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        double avg = 0.0;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) avg += 0.25 * pf[static_cast<Index>(f.index(2 * i + a, 2 * j + b))];
        const double d = pc[static_cast<Index>(c.index(i, j))] - avg;
        e += d * d;
      }
    return std::sqrt(e / static_cast<double>(n * n));
  };
  const double e1 = coarse_error(16), e2 = coarse_error(32);
  EXPECT_GE(std::log2(e1 / e2), 1.7) << e1 << " " << e2;
}

TEST(Pressure, RejectsNonPositivePermeability) {
  const Grid g(4);
  Vector k = constant(g, 1.0);
  k[5] = 0.0;
  EXPECT_THROW(solve_pressure(g, k), DomainError);
}

TEST(Velocity, UniformFlowForUnitPermeability) {
  const Grid g(12);
  const Vector k = constant(g, 1.0);
  const Velocity v = darcy_velocity(g, k, solve_pressure(g, k));
  EXPECT_LT((v.u.array() - 1.0).abs().maxCoeff(), 1e-8);
  EXPECT_LT(v.v.cwiseAbs().maxCoeff(), 1e-8);
  for (double x : {0.0, 0.3, 0.77, 1.0}) {
    const auto w = v.at(x, 0.41);
    EXPECT_NEAR(w[0], 1.0, 1e-8);
    EXPECT_NEAR(w[1], 0.0, 1e-8);
  }
}

TEST(HittingTime, ScalesWithConstantPermeability) {
  const Grid g(10);
  for (double c : {1.0, 2.0, 0.5}) {
    const Vector k = constant(g, c);
    const Velocity v = darcy_velocity(g, k, solve_pressure(g, k));
    const HittingTime t = hitting_time(v, {0.0, 0.5});
    EXPECT_NEAR(t.time, 1.0 / c, 1e-3) << c;
    EXPECT_FALSE(t.censored);
  }
}

TEST(HittingTime, CensoredAtCap) {
  const Grid g(10);
  const Vector k = constant(g, 1e-3);
  const Velocity v = darcy_velocity(g, k, solve_pressure(g, k));
  const HittingTime t = hitting_time(v, {0.0, 0.5}, {5.0, 0.1});
  EXPECT_TRUE(t.censored);
  EXPECT_EQ(t.time, 5.0);
}

TEST(HittingTime, HalvingTheStepChangesLittle) {
  const Grid g(25);
  const DarcyHyper h{0.4, 0.4, 0.8};
  const KLEBasis b = kle_decompose(h, g, EnergyTarget{0.9});
  RandomStream s(4, 0);
  const FieldRealization f = realize_log_perm(b, normals(b.n_kl, s), constant(g, 0.0), h.sigma_a);
  const Velocity v = darcy_velocity(g, f.perm, solve_pressure(g, f.perm));
  // A large cap leaves the local rule in charge of the step.
  const HittingTime a = hitting_time(v, {0.0, 0.5}, {1e4, 0.1});
  const HittingTime c = hitting_time(v, {0.0, 0.5}, {1e4, 0.05});
  EXPECT_GT(c.steps, a.steps);
  EXPECT_LT(std::abs(a.time - c.time), 1e-4);
  const HittingTime d = hitting_time(v, {0.0, 0.5});
  const HittingTime e = hitting_time(v, {0.0, 0.5}, {50.0, 0.1});
  EXPECT_LT(std::abs(d.time - e.time), 1e-4);
}

TEST(DarcyQoi, ZeroCoordinatesGiveUnitTime) {
  const auto ctx = std::make_shared<const DarcyContext>(make_context({0.4, 0.4, 0.8}, Grid(16), 20));
  EXPECT_NEAR(qoi_darcy(std::vector<double>(20, 0.0), *ctx), 1.0, 1e-3);
  const Qoi q = make_qoi(ctx);
  EXPECT_NEAR(q(std::vector<double>(20, 0.0)), 1.0, 1e-3);
}

TEST(DarcyQoi, PositiveAndRightSkewed) {
  const auto ctx = std::make_shared<const DarcyContext>(make_context({0.4, 0.4, 0.8}, Grid(25), 49));
  const Qoi q = make_qoi(ctx);
  RandomStream s(5, 0);
  const std::size_t n = 2000;
  std::vector<double> t(n);
  for (double& x : t) {
    x = q(normals(49, s));
    EXPECT_GT(x, 0.0);
  }
  const double m = std::accumulate(t.begin(), t.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : t) {
    m2 += (x - m) * (x - m) / n;
    m3 += (x - m) * (x - m) * (x - m) / n;
  }
  EXPECT_GT(m3 / std::pow(m2, 1.5), 0.0);
}

TEST(MeanField, FileRoundTripAndCsvDumps) {
  const Grid g(5);
  Vector f(static_cast<Index>(g.cells()));
  for (Index k = 0; k < f.size(); ++k) f[k] = 0.1 * static_cast<double>(k) - 1.0 / 3.0;
  const auto dir = std::filesystem::temp_directory_path() / "raresobol_darcy_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "mean.txt").string();
  save_mean_field(path, g, f);
  EXPECT_EQ(load_mean_field(path, g), f);
  EXPECT_THROW(load_mean_field(path, Grid(6)), IoError);
  EXPECT_THROW(load_mean_field((dir / "missing.txt").string(), g), IoError);

  const Vector k = constant(g, 1.0);
  write_cell_csv((dir / "perm.csv").string(), g, k);
  write_velocity_csv((dir / "vel.csv").string(), darcy_velocity(g, k, solve_pressure(g, k)));
  std::ifstream in(dir / "perm.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x,y,value");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, g.cells());
  std::filesystem::remove_all(dir);
}
