#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raresobol/driver.hpp"
#include "raresobol/errors.hpp"
#include "raresobol/model_analytic.hpp"
#include "raresobol/model_darcy.hpp"

using namespace raresobol;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<double> tau;
  std::optional<std::size_t> n_samp, n_ss, threads;
  std::optional<double> p0;
  std::optional<unsigned> pce_order;
  std::optional<std::string> lambda;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON file with flat dotted keys");
  app->add_option("--seed", f.seed, "Root seed");
  app->add_option("--model", f.model, "analytic or darcy")->check(CLI::IsMember({"analytic", "darcy"}));
  app->add_option("--tau", f.tau, "Rare-event threshold");
  app->add_option("--n-samp", f.n_samp, "Outer sample count");
  app->add_option("--n-ss", f.n_ss, "Samples per subset-simulation level");
  app->add_option("--p0", f.p0, "Conditional probability per level");
  app->add_option("--pce-order", f.pce_order, "Total PCE order");
  app->add_option("--lambda", f.lambda, "l1 radius, or cv");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--threads", f.threads, "Worker threads");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.model) set_option(cfg, "model", *f.model);
  if (f.seed) set_option(cfg, "seed", *f.seed);
  if (f.tau) set_option(cfg, "tau", *f.tau);
  if (f.n_samp) set_option(cfg, "n_samp", *f.n_samp);
  if (f.n_ss) set_option(cfg, "ss.n_per_level", *f.n_ss);
  if (f.p0) set_option(cfg, "ss.p0", *f.p0);
  if (f.pce_order) set_option(cfg, "pce.order", *f.pce_order);
  if (f.lambda) {
    if (*f.lambda == "cv") {
      set_option(cfg, "pce.lambda", "cv");
    } else {
      try {
        set_option(cfg, "pce.lambda", std::stod(*f.lambda));
      } catch (const std::logic_error&) {
        throw ConfigError("--lambda: expected a number or cv");
      }
    }
  }
  if (f.out) set_option(cfg, "output_dir", *f.out);
  if (f.threads) set_option(cfg, "threads", *f.threads);
  cfg.validate();
  return cfg;
}

void print_indices(const char* label, const std::vector<double>& v) {
  std::printf("%s", label);
  for (double x : v) std::printf(" %.6f", x);
  std::printf("\n");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

int cmd_exact(const ExperimentConfig& cfg, const std::vector<double>& taus, std::size_t n_outer) {
  if (cfg.model != ModelKind::analytic) throw ConfigError("exact: analytic model only");
  const auto h = analytic::AnalyticHyper::from_xi(cfg.nominal_xi());
  RandomStream stream(cfg.seed, 0);
  const auto curve = analytic::cov_vs_threshold_curve(h, taus, cfg.perturbation, n_outer, stream);
  std::printf("tau,p_nominal,mean,stddev,cov,cov_bound\n");
  for (const auto& pt : curve) {
    std::printf("%s,%s,%s,%s,%s,%s\n", format_double(pt.tau).c_str(),
                format_double(analytic::exact_probability(h, pt.tau)).c_str(),
                format_double(pt.mean).c_str(), format_double(pt.stddev).c_str(),
                pt.cov ? format_double(*pt.cov).c_str() : "",
                pt.bound ? format_double(*pt.bound).c_str() : "");
  }
  return 0;
}

int cmd_ss_estimate(ExperimentConfig cfg) {
  cfg.inner = InnerKind::ss;
  const auto xi = cfg.nominal_xi();
  RandomStream stream(cfg.seed, 0);
  const InnerEstimate e = estimate_probability(cfg, xi, stream);
  std::printf("p_hat %s\nlevels %zu\nn_evals %zu\n", format_double(e.p_hat).c_str(), e.levels,
              e.n_evals);
  if (cfg.model == ModelKind::analytic) {
    std::printf("exact %s\n", format_double(analytic::exact_probability_xi(xi, cfg.tau)).c_str());
  }
  if (e.excluded) std::printf("warning %s\n", e.reason.c_str());
  return 0;
}

int cmd_double_loop(const ExperimentConfig& cfg) {
  const RunArtifacts a = run_double_loop(cfg);
  write_artifacts(a, cfg.output_dir);
  std::printf("retained %zu of %zu samples, %zu model evaluations, lambda %s\n", a.p_hats.size(),
              a.diagnostics.size(), a.total_evals, format_double(a.lambda_used).c_str());
  print_indices("first_order", a.sobol.first_order);
  print_indices("total", a.sobol.total);
  std::printf("artifacts written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_variability(const ExperimentConfig& cfg, std::size_t reps) {
  const VariabilityTable t = variability_study(cfg, reps);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / "variability.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "index,pce_mean,pce_std,saltelli_mean,saltelli_std\n";
  std::printf("budget %zu, saltelli base %zu, repetitions %zu\n", t.budget, t.saltelli_base, reps);
  std::printf("index  pce_mean  pce_std  saltelli_mean  saltelli_std\n");
  for (std::size_t i = 0; i < t.pce_mean.size(); ++i) {
    out << i + 1 << ',' << format_double(t.pce_mean[i]) << ',' << format_double(t.pce_std[i]) << ','
        << format_double(t.saltelli_mean[i]) << ',' << format_double(t.saltelli_std[i]) << '\n';
    std::printf("%5zu  %8.4f  %7.4f  %13.4f  %12.4f\n", i + 1, t.pce_mean[i], t.pce_std[i],
                t.saltelli_mean[i], t.saltelli_std[i]);
  }
  return 0;
}

int cmd_budget_sweep(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_ss,
                     const std::vector<std::size_t>& n_samp, std::size_t reps) {
  const auto cells = budget_sweep(cfg, n_ss, n_samp, reps);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / "budget_sweep.csv";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t m = cells.front().mean_total.size();
  out << "n_ss,n_samp";
  for (std::size_t i = 0; i < m; ++i) out << ",total_" << i + 1;
  for (std::size_t i = 0; i < m; ++i) out << ",std_" << i + 1;
  out << '\n';
  for (const auto& c : cells) {
    out << c.n_ss << ',' << c.n_samp << ',' << join(c.mean_total) << ',' << join(c.std_total) << '\n';
    std::printf("n_ss %zu n_samp %zu:", c.n_ss, c.n_samp);
    for (double x : c.mean_total) std::printf(" %.4f", x);
    std::printf("\n");
  }
  return 0;
}

int cmd_darcy_demo(ExperimentConfig cfg) {
  cfg.model = ModelKind::darcy;
  if (cfg.nominal.size() != 3) cfg.nominal.clear();
  const darcy::Grid grid(cfg.darcy_grid);
  const auto hyper = darcy::DarcyHyper::from_xi(cfg.nominal_xi());
  const std::size_t n_kl = cfg.darcy_n_kl != 0
                               ? cfg.darcy_n_kl
                               : darcy::modes_for_energy(grid, hyper.lx, hyper.ly, 0.9);
  std::optional<Vector> mean;
  if (!cfg.darcy_mean_field.empty()) mean = darcy::load_mean_field(cfg.darcy_mean_field, grid);
  darcy::TrackingOptions tracking;
  tracking.t_cap = cfg.darcy_t_cap;
  const auto ctx = darcy::make_context(hyper, grid, n_kl, mean, tracking);

  RandomStream stream(cfg.seed, 0);
  std::vector<double> theta(n_kl);
  for (double& t : theta) t = standard_normal(stream);
  const auto field = darcy::realize_log_perm(ctx.basis, theta, ctx.mean_field, hyper.sigma_a);
  const Vector p = darcy::solve_pressure(grid, field.perm);
  const auto vel = darcy::darcy_velocity(grid, field.perm, p);
  const auto hit = darcy::hitting_time(vel, ctx.x0, tracking);

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  darcy::write_cell_csv((dir / "log_perm.csv").string(), grid, field.log_perm);
  darcy::write_cell_csv((dir / "pressure.csv").string(), grid, p);
  darcy::write_velocity_csv((dir / "velocity.csv").string(), vel);
  std::printf("grid %zu, n_kl %zu, energy %.4f\n", grid.n(), n_kl, ctx.basis.energy_fraction);
  std::printf("hitting_time %s%s\n", format_double(hit.time).c_str(), hit.censored ? " (censored)" : "");
  std::printf("inflow %.12g outflow %.12g\n", vel.inflow(), vel.outflow());
  std::printf("fields written to %s\n", cfg.output_dir.c_str());
  return 0;
}

int cmd_sobol_report(const std::string& surrogate_path) {
  const PCESurrogate s = load_surrogate(surrogate_path);
  std::fputs(to_json(sobol_report(s, s.dim() <= 12)).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rare-event probabilities and their Sobol' sensitivities to hyper-parameters"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<double> taus{2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  std::size_t n_outer = 100000;
  std::size_t reps = 100;
  std::vector<std::size_t> n_ss_grid{100, 500, 1000};
  std::vector<std::size_t> n_samp_grid{100, 1000};
  std::string surrogate_path;

  auto* exact = app.add_subcommand("exact", "Closed-form probabilities and CoV versus threshold");
  add_common(exact, flags);
  exact->add_option("--taus", taus, "Thresholds for the table")->delimiter(',');
  exact->add_option("--n-outer", n_outer, "Hyper-parameter samples per threshold");

  auto* ss = app.add_subcommand("ss-estimate", "One subset-simulation run at the nominal point");
  add_common(ss, flags);

  auto* dl = app.add_subcommand("double-loop", "Outer design, inner estimates, PCE and indices");
  add_common(dl, flags);

  auto* var = app.add_subcommand("variability", "Spread of PCE and Saltelli total indices");
  add_common(var, flags);
  var->add_option("--reps", reps, "Repetitions");

  auto* sweep = app.add_subcommand("budget-sweep", "Total indices over N_SS and N_samp grids");
  add_common(sweep, flags);
  sweep->add_option("--n-ss-grid", n_ss_grid, "Samples per level")->delimiter(',');
  sweep->add_option("--n-samp-grid", n_samp_grid, "Outer sample counts")->delimiter(',');
  sweep->add_option("--reps", reps, "Repetitions")->default_val(1);

  auto* demo = app.add_subcommand("darcy-demo", "Dump one permeability, pressure and velocity field");
  add_common(demo, flags);

  auto* rep = app.add_subcommand("sobol-report", "Indices of a saved surrogate");
  rep->add_option("surrogate", surrogate_path, "surrogate.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*rep) return cmd_sobol_report(surrogate_path);
    if (*demo) {
      if (!flags.model) flags.model = "darcy";
      return cmd_darcy_demo(resolve(flags));
    }
    const ExperimentConfig cfg = resolve(flags);
    if (*exact) return cmd_exact(cfg, taus, n_outer);
    if (*ss) return cmd_ss_estimate(cfg);
    if (*dl) return cmd_double_loop(cfg);
    if (*var) return cmd_variability(cfg, reps);
    if (*sweep) return cmd_budget_sweep(cfg, n_ss_grid, n_samp_grid, reps);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
