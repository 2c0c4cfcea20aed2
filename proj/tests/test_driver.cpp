#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "raresobol/driver.hpp"
#include "raresobol/errors.hpp"
#include "raresobol/model_analytic.hpp"

using namespace raresobol;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_samp = 40;
  c.ss.n_per_level = 200;
  c.pce_order = 2;
  c.lambda = 0.05;
  c.seed = 17;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void expect_same(const RunArtifacts& a, const RunArtifacts& b) {
  EXPECT_EQ(a.xi_samples, b.xi_samples);
  EXPECT_EQ(a.p_hats, b.p_hats);
  EXPECT_EQ(a.surrogate.coeffs, b.surrogate.coeffs);
  EXPECT_EQ(a.surrogate.basis, b.surrogate.basis);
  EXPECT_EQ(a.sobol.total, b.sobol.total);
  EXPECT_EQ(a.sobol.first_order, b.sobol.first_order);
  EXPECT_EQ(a.total_evals, b.total_evals);
  EXPECT_EQ(a.n_excluded, b.n_excluded);
  EXPECT_EQ(a.lambda_used, b.lambda_used);
  ASSERT_EQ(a.diagnostics.size(), b.diagnostics.size());
  for (std::size_t k = 0; k < a.diagnostics.size(); ++k) {
    EXPECT_EQ(a.diagnostics[k].levels, b.diagnostics[k].levels);
    EXPECT_EQ(a.diagnostics[k].n_evals, b.diagnostics[k].n_evals);
    EXPECT_EQ(a.diagnostics[k].excluded, b.diagnostics[k].excluded);
    EXPECT_EQ(a.diagnostics[k].reason, b.diagnostics[k].reason);
  }
}

}  // namespace

TEST(Config, DefaultsAndBox) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.nominal_xi(), analytic::nominal_hyper().to_xi());
  const UniformBox b = c.box();
  EXPECT_DOUBLE_EQ(b.lower()[5], 9.0);
  EXPECT_DOUBLE_EQ(b.upper()[5], 11.0);
  c.model = ModelKind::darcy;
  EXPECT_EQ(c.nominal_xi(), (std::vector<double>{0.4, 0.4, 0.8}));
}

TEST(Config, FlatKeysFromJson) {
  const ExperimentConfig c = config_from_json(R"({
    "model": "analytic", "tau": 2.5, "n_samp": 64, "seed": 99,
    "ss.n_per_level": 300, "ss.p0": 0.2, "pce.order": 2, "pce.lambda": "cv",
    "xi.perturbation": 0.05, "inner": "exact", "threads": 2
  })");
  EXPECT_EQ(c.tau, 2.5);
  EXPECT_EQ(c.n_samp, 64u);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.ss.n_per_level, 300u);
  EXPECT_EQ(c.ss.p0, 0.2);
  EXPECT_EQ(c.pce_order, 2u);
  EXPECT_FALSE(c.lambda);
  EXPECT_EQ(c.perturbation, 0.05);
  EXPECT_EQ(c.inner, InnerKind::exact);
  EXPECT_EQ(c.threads, 2u);
  const ExperimentConfig back = config_from_json(config_to_json(c).dump());
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(config_from_json(R"({"ss.nper": 10})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"tau": "high"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"model": "heat"})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"xi.perturbation": 1.5})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"n_samp": 0})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"model": "darcy", "inner": "exact"})"), ConfigError);
  EXPECT_THROW(config_from_json("{"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(DoubleLoop, SingleSampleIsUnderdetermined) {
  ExperimentConfig c = small_config();
  c.n_samp = 1;
  EXPECT_THROW(run_double_loop(c), UnderdeterminedError);
}

TEST(DoubleLoop, DeterministicAndByteIdentical) {
  const ExperimentConfig c = small_config();
  const RunArtifacts a = run_double_loop(c);
  const RunArtifacts b = run_double_loop(c);
  expect_same(a, b);
  TempDir d1("raresobol_run_a"), d2("raresobol_run_b");
  write_artifacts(a, d1.path.string());
  write_artifacts(b, d2.path.string());
  for (const char* f : {"manifest.json", "xi_samples.csv", "p_hats.csv", "diagnostics.csv",
                        "surrogate.json", "sobol.json"}) {
    EXPECT_EQ(slurp(d1.path / f), slurp(d2.path / f)) << f;
  }
}

TEST(DoubleLoop, ParallelMatchesSerial) {
  ExperimentConfig c = small_config();
  const RunArtifacts serial = run_double_loop(c);
  c.threads = 4;
  c.ss.threads = 2;
  RunArtifacts parallel = run_double_loop(c);
  expect_same(serial, parallel);
}

TEST(DoubleLoop, AccountingAndShapes) {
  const ExperimentConfig c = small_config();
  const RunArtifacts a = run_double_loop(c);
  EXPECT_EQ(a.diagnostics.size(), c.n_samp);
  EXPECT_EQ(a.p_hats.size() + a.n_excluded, c.n_samp);
  EXPECT_EQ(static_cast<std::size_t>(a.xi_samples.rows()), a.p_hats.size());
  EXPECT_EQ(a.xi_samples.cols(), 10);
  std::size_t sum = 0;
  for (const auto& d : a.diagnostics) sum += d.n_evals;
  EXPECT_EQ(a.total_evals, sum);
  for (double p : a.p_hats) {
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  const UniformBox box = c.box();
  for (Eigen::Index r = 0; r < a.xi_samples.rows(); ++r)
    for (Eigen::Index k = 0; k < 10; ++k) {
      EXPECT_GE(a.xi_samples(r, k), box.lower()[static_cast<std::size_t>(k)]);
      EXPECT_LE(a.xi_samples(r, k), box.upper()[static_cast<std::size_t>(k)]);
    }
  EXPECT_EQ(a.surrogate.basis.size(), total_order_size(10, 2));
  EXPECT_EQ(a.lambda_used, 0.05);
}

TEST(DoubleLoop, InnerEstimateMatchesSubsetSimulationOnItsStream) {
  const ExperimentConfig c = small_config();
  const std::vector<double> xi = c.nominal_xi();
  RandomStream s1(5, 0), s2(5, 0);
  const InnerEstimate e = estimate_probability(c, xi, s1);
  SSConfig ss = c.ss;
  ss.tau = c.tau;
  const SSResult r = run_subset_simulation(
      analytic::standardized_qoi(analytic::AnalyticHyper::from_xi(xi)), 5, ss, s2);
  EXPECT_EQ(e.p_hat, r.p_hat);
  EXPECT_EQ(e.levels, r.n_levels);
  EXPECT_EQ(e.n_evals, r.n_evals);
  EXPECT_FALSE(e.excluded);

  ExperimentConfig exact = c;
  exact.inner = InnerKind::exact;
  RandomStream s3(5, 0);
  const InnerEstimate x = estimate_probability(exact, xi, s3);
  EXPECT_EQ(x.p_hat, analytic::exact_probability_xi(xi, c.tau));
  EXPECT_EQ(x.n_evals, 1u);
}

TEST(DoubleLoop, ExactInnerRecoversClosedFormIndicesOrdering) {
  ExperimentConfig c = small_config();
  c.inner = InnerKind::exact;
  c.n_samp = 300;
  c.pce_order = 2;
  c.lambda = 1e6;
  const RunArtifacts a = run_double_loop(c);
  EXPECT_EQ(a.total_evals, c.n_samp);
  // Jansen pick-and-freeze estimate of the total indices of the closed form.
  const UniformBox box = c.box();
  RandomStream st(23, 0);
  const std::size_t n = 100000;
  const auto draw = [&] {
    std::vector<double> x(10);
    for (std::size_t i = 0; i < 10; ++i) x[i] = box.lower()[i] + box.width(i) * st.uniform();
    return x;
  };
  std::vector<double> num(10, 0.0);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto xa = draw(), xb = draw();
    const double fa = analytic::exact_probability_xi(xa, c.tau);
    sum += fa;
    sum2 += fa * fa;
    for (std::size_t i = 0; i < 10; ++i) {
      auto xm = xa;
      xm[i] = xb[i];
      const double d = fa - analytic::exact_probability_xi(xm, c.tau);
      num[i] += 0.5 * d * d;
    }
  }
  const double var = sum2 / n - (sum / n) * (sum / n);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a.sobol.total[i], num[i] / n / var, 0.05) << i;
}

TEST(Artifacts, RoundTripIsBitExact) {
  const RunArtifacts a = run_double_loop(small_config());
  TempDir d("raresobol_roundtrip");
  write_artifacts(a, d.path.string());
  const RunArtifacts b = read_artifacts(d.path.string());
  expect_same(a, b);
  EXPECT_EQ(config_to_json(b.config), config_to_json(a.config));
  const auto manifest = nlohmann::json::parse(slurp(d.path / "manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 17u);
  std::ifstream in(d.path / "p_hats.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "p_hat");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, a.diagnostics.size() - a.n_excluded);
  std::ifstream xi(d.path / "xi_samples.csv");
  std::getline(xi, line);
  EXPECT_EQ(line.substr(0, 10), "xi_1,xi_2,");
}

TEST(Artifacts, MissingOrCorruptFilesNameTheFile) {
  const RunArtifacts a = run_double_loop(small_config());
  TempDir d("raresobol_corrupt");
  write_artifacts(a, d.path.string());
  fs::remove(d.path / "p_hats.csv");
  try {
    read_artifacts(d.path.string());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("p_hats.csv"), std::string::npos);
  }
  write_artifacts(a, d.path.string());
  std::ofstream(d.path / "diagnostics.csv") << "index,levels\n1,x\n";
  try {
    read_artifacts(d.path.string());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("diagnostics.csv"), std::string::npos);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 3.6951e-5, -2.5e-300, 1e308, 0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Variability, TwoRepetitionsGiveAFullTable) {
  ExperimentConfig c = small_config();
  c.inner = InnerKind::exact;
  c.n_samp = 120;
  const VariabilityTable t = variability_study(c, 2);
  EXPECT_EQ(t.budget, 120u);
  EXPECT_EQ(t.saltelli_base, 10u);
  ASSERT_EQ(t.pce_totals.size(), 2u);
  ASSERT_EQ(t.saltelli_totals.size(), 2u);
  for (const auto* v : {&t.pce_mean, &t.pce_std, &t.saltelli_mean, &t.saltelli_std}) {
    ASSERT_EQ(v->size(), 10u);
    for (double x : *v) EXPECT_TRUE(std::isfinite(x));
  }
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(t.pce_std[i], std::abs(t.pce_totals[0][i] - t.pce_totals[1][i]) / std::sqrt(2.0), 1e-12);
  }
  EXPECT_THROW(variability_study(c, 1), DomainError);
}

TEST(BudgetSweep, GridShapeAndNestedDesigns) {
  ExperimentConfig c = small_config();
  const std::vector<std::size_t> ss{100, 200}, samp{20, 40};
  const auto cells = budget_sweep(c, ss, samp);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& cell : cells) {
    EXPECT_EQ(cell.mean_total.size(), 10u);
    EXPECT_EQ(cell.std_total.size(), 10u);
  }
  EXPECT_THROW(budget_sweep(c, {}, samp), DomainError);
  const auto again = budget_sweep(c, ss, samp);
  for (std::size_t k = 0; k < cells.size(); ++k) EXPECT_EQ(cells[k].mean_total, again[k].mean_total);
}
