#include "raresobol/driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "raresobol/errors.hpp"
#include "raresobol/model_analytic.hpp"
#include "raresobol/model_darcy.hpp"
#include "raresobol/parallel.hpp"

namespace raresobol {
namespace {

using Index = Eigen::Index;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// Stream layout under RandomStream(seed, 0).
constexpr std::uint64_t kDesignStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kFitStream = 2;
constexpr std::uint64_t kVariabilityStream = 3;
constexpr std::uint64_t kSweepStream = 4;

std::string model_name(ModelKind m) { return m == ModelKind::analytic ? "analytic" : "darcy"; }
std::string inner_name(InnerKind k) { return k == InnerKind::exact ? "exact" : "ss"; }

template <typename T>
T get_as(const std::string& key, const json& v) {
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t> ||
                  std::is_same_v<T, unsigned>) {
      if (!v.is_number_unsigned() &&
          !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ConfigError(key + ": expected a non-negative integer");
      }
    }
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key + ": value has the wrong type");
  }
}

// Everything a worker needs to evaluate P at a hyper-parameter point.
struct InnerSetup {
  std::optional<darcy::Grid> grid;
  std::size_t n_kl = 0;
  Vector mean_field;
};

InnerSetup prepare_inner(const ExperimentConfig& cfg) {
  InnerSetup s;
  if (cfg.model == ModelKind::darcy) {
    s.grid.emplace(cfg.darcy_grid);
    const UniformBox box = cfg.box();
    s.n_kl = cfg.darcy_n_kl != 0
                 ? cfg.darcy_n_kl
                 : darcy::modes_for_energy(*s.grid, box.lower()[0], box.lower()[1], 0.9);
    s.mean_field = cfg.darcy_mean_field.empty()
                       ? Vector::Zero(static_cast<Index>(s.grid->cells()))
                       : darcy::load_mean_field(cfg.darcy_mean_field, *s.grid);
  }
  return s;
}

InnerEstimate estimate_with(const ExperimentConfig& cfg, const InnerSetup& setup,
                            std::span<const double> xi, RandomStream& stream) {
  InnerEstimate out;
  if (cfg.inner == InnerKind::exact) {
    out.p_hat = analytic::exact_probability_xi(xi, cfg.tau);
    out.n_evals = 1;
    return out;
  }
  Qoi qoi;
  std::size_t dim = 0;
  if (cfg.model == ModelKind::analytic) {
    const auto h = analytic::AnalyticHyper::from_xi(xi);
    qoi = analytic::standardized_qoi(h);
    dim = h.dim();
  } else {
    darcy::TrackingOptions tracking;
    tracking.t_cap = cfg.darcy_t_cap;
    auto ctx = std::make_shared<darcy::DarcyContext>(darcy::make_context(
        darcy::DarcyHyper::from_xi(xi), *setup.grid, setup.n_kl, setup.mean_field, tracking));
    qoi = darcy::make_qoi(std::move(ctx));
    dim = setup.n_kl;
  }
  SSConfig ss = cfg.ss;
  ss.tau = cfg.tau;
  try {
    const SSResult r = run_subset_simulation(qoi, dim, ss, stream);
    out.p_hat = r.p_hat;
    out.levels = r.n_levels;
    out.n_evals = r.n_evals;
    if (r.terminated_early) {
      out.excluded = true;
      out.reason = "max_levels reached";
    }
  } catch (const DegenerateLevelError& e) {
    out.excluded = true;
    out.reason = "degenerate level";
  }
  return out;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(static_cast<Index>(rows[r]));
  return out;
}

std::vector<double> row_of(const Matrix& m, Index r) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

std::vector<InnerEstimate> estimate_rows(const ExperimentConfig& cfg, const InnerSetup& setup,
                                         const Matrix& design, const RandomStream& base) {
  std::vector<InnerEstimate> est(static_cast<std::size_t>(design.rows()));
  parallel_for(est.size(), cfg.threads, [&](std::size_t j) {
    RandomStream s = base.substream(j);
    const auto xi = row_of(design, static_cast<Index>(j));
    est[j] = estimate_with(cfg, setup, xi, s);
  });
  return est;
}

void check_exclusions(std::size_t excluded, std::size_t total) {
  if (10 * excluded > total) {
    throw NumericalError("double loop: " + std::to_string(excluded) + " of " +
                         std::to_string(total) + " samples excluded, above the 10% ceiling");
  }
}

std::vector<double> sample_std(const std::vector<std::vector<double>>& rows,
                               const std::vector<double>& mean) {
  std::vector<double> sd(mean.size(), 0.0);
  if (rows.size() < 2) return sd;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += (r[i] - mean[i]) * (r[i] - mean[i]);
  }
  for (double& x : sd) x = std::sqrt(x / static_cast<double>(rows.size() - 1));
  return sd;
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  std::vector<double> m(rows.empty() ? 0 : rows.front().size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += r[i];
  }
  for (double& x : m) x /= static_cast<double>(rows.size());
  return m;
}

// Fits on the retained rows of a design and returns total indices.
std::vector<double> fitted_totals(const ExperimentConfig& cfg, const Matrix& design,
                                  const std::vector<InnerEstimate>& est, std::size_t n_rows,
                                  RandomStream& fit_stream) {
  std::vector<std::size_t> keep;
  std::vector<double> y;
  std::size_t excluded = 0;
  for (std::size_t j = 0; j < n_rows; ++j) {
    if (est[j].excluded) {
      ++excluded;
      continue;
    }
    keep.push_back(j);
    y.push_back(est[j].p_hat);
  }
  check_exclusions(excluded, n_rows);
  const auto [s, lambda] = fit_probability_surrogate(cfg, select_rows(design, keep), y, fit_stream);
  return total_indices(s);
}

// ---- CSV helpers ----

std::ofstream open_write(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p,
                                               std::vector<std::string>& header) {
  std::istringstream in(read_file(p));
  std::string line;
  if (!std::getline(in, line)) throw IoError(p.string() + ": missing header row");
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  header = split(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) throw IoError(p.string() + ": ragged row");
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_double(const std::string& s, const std::filesystem::path& p) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(p.string() + ": bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& s, const std::filesystem::path& p) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw IoError(p.string() + ": bad count '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// ---- configuration ----

void ExperimentConfig::validate() const {
  if (n_samp < 1) throw ConfigError("n_samp must be >= 1");
  if (!(perturbation > 0.0 && perturbation < 1.0)) {
    throw ConfigError("xi.perturbation must lie in (0,1)");
  }
  if (!std::isfinite(tau)) throw ConfigError("tau must be finite");
  if (lambda && !(*lambda > 0.0)) throw ConfigError("pce.lambda must be > 0 or \"cv\"");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (inner == InnerKind::exact && model != ModelKind::analytic) {
    throw ConfigError("inner = exact is only available for the analytic model");
  }
  const auto xi = nominal_xi();
  if (model == ModelKind::analytic && (xi.empty() || xi.size() % 2 != 0)) {
    throw ConfigError("xi.nominal: analytic model needs d means followed by d variances");
  }
  if (model == ModelKind::darcy) {
    if (xi.size() != 3) throw ConfigError("xi.nominal: darcy model needs (lx, ly, sigma_a)");
    if (darcy_grid < 4) throw ConfigError("darcy.grid must be >= 4");
    if (!(darcy_t_cap > 0.0)) throw ConfigError("darcy.t_cap must be > 0");
  }
  for (double v : xi) {
    if (!(v > 0.0) && model == ModelKind::darcy) throw ConfigError("xi.nominal entries must be > 0");
  }
  try {
    SSConfig s = ss;
    s.tau = tau;
    s.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("ss: ") + e.what());
  }
}

std::vector<double> ExperimentConfig::nominal_xi() const {
  if (!nominal.empty()) return nominal;
  if (model == ModelKind::analytic) return analytic::nominal_hyper().to_xi();
  return darcy::DarcyHyper{}.to_xi();
}

UniformBox ExperimentConfig::box() const {
  try {
    return UniformBox::around(nominal_xi(), perturbation);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("hyper-parameter box: ") + e.what());
  }
}

void set_option(ExperimentConfig& cfg, const std::string& key, const json& v) {
  if (key == "model") {
    const auto s = get_as<std::string>(key, v);
    if (s == "analytic") cfg.model = ModelKind::analytic;
    else if (s == "darcy") cfg.model = ModelKind::darcy;
    else throw ConfigError("model: expected analytic or darcy, got " + s);
  } else if (key == "inner") {
    const auto s = get_as<std::string>(key, v);
    if (s == "exact") cfg.inner = InnerKind::exact;
    else if (s == "ss") cfg.inner = InnerKind::ss;
    else throw ConfigError("inner: expected exact or ss, got " + s);
  } else if (key == "xi.nominal") {
    cfg.nominal = get_as<std::vector<double>>(key, v);
  } else if (key == "xi.perturbation") {
    cfg.perturbation = get_as<double>(key, v);
  } else if (key == "tau") {
    cfg.tau = get_as<double>(key, v);
  } else if (key == "n_samp") {
    cfg.n_samp = get_as<std::size_t>(key, v);
  } else if (key == "seed") {
    cfg.seed = get_as<std::uint64_t>(key, v);
  } else if (key == "output_dir") {
    cfg.output_dir = get_as<std::string>(key, v);
  } else if (key == "threads") {
    cfg.threads = get_as<std::size_t>(key, v);
  } else if (key == "ss.n_per_level") {
    cfg.ss.n_per_level = get_as<std::size_t>(key, v);
  } else if (key == "ss.p0") {
    cfg.ss.p0 = get_as<double>(key, v);
  } else if (key == "ss.max_levels") {
    cfg.ss.max_levels = get_as<std::size_t>(key, v);
  } else if (key == "ss.proposal_spread") {
    cfg.ss.proposal_spread = get_as<double>(key, v);
  } else if (key == "ss.threads") {
    cfg.ss.threads = get_as<std::size_t>(key, v);
  } else if (key == "pce.order") {
    cfg.pce_order = get_as<unsigned>(key, v);
  } else if (key == "pce.lambda") {
    if (v.is_string()) {
      if (v.get<std::string>() != "cv") throw ConfigError("pce.lambda: expected a number or \"cv\"");
      cfg.lambda.reset();
    } else {
      cfg.lambda = get_as<double>(key, v);
    }
  } else if (key == "darcy.grid") {
    cfg.darcy_grid = get_as<std::size_t>(key, v);
  } else if (key == "darcy.n_kl") {
    cfg.darcy_n_kl = get_as<std::size_t>(key, v);
  } else if (key == "darcy.t_cap") {
    cfg.darcy_t_cap = get_as<double>(key, v);
  } else if (key == "darcy.mean_field") {
    cfg.darcy_mean_field = get_as<std::string>(key, v);
  } else {
    throw ConfigError("unknown configuration key: " + key);
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) set_option(cfg, key, value);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["model"] = model_name(cfg.model);
  j["inner"] = inner_name(cfg.inner);
  j["xi.nominal"] = cfg.nominal_xi();
  j["xi.perturbation"] = cfg.perturbation;
  j["tau"] = cfg.tau;
  j["n_samp"] = cfg.n_samp;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["threads"] = cfg.threads;
  j["ss.n_per_level"] = cfg.ss.n_per_level;
  j["ss.p0"] = cfg.ss.p0;
  j["ss.max_levels"] = cfg.ss.max_levels;
  j["ss.proposal_spread"] = cfg.ss.proposal_spread;
  j["ss.threads"] = cfg.ss.threads;
  j["pce.order"] = cfg.pce_order;
  if (cfg.lambda) j["pce.lambda"] = *cfg.lambda;
  else j["pce.lambda"] = "cv";
  j["darcy.grid"] = cfg.darcy_grid;
  j["darcy.n_kl"] = cfg.darcy_n_kl;
  j["darcy.t_cap"] = cfg.darcy_t_cap;
  j["darcy.mean_field"] = cfg.darcy_mean_field;
  return j;
}

// ---- pipelines ----

InnerEstimate estimate_probability(const ExperimentConfig& cfg, std::span<const double> xi,
                                   RandomStream& stream) {
  cfg.validate();
  return estimate_with(cfg, prepare_inner(cfg), xi, stream);
}

std::pair<PCESurrogate, double> fit_probability_surrogate(const ExperimentConfig& cfg,
                                                          const Matrix& xi,
                                                          std::span<const double> p,
                                                          RandomStream& stream) {
  const UniformBox box = cfg.box();
  const std::size_t m = box.dim();
  if (static_cast<std::size_t>(xi.rows()) < m + 1) {
    throw UnderdeterminedError("PCE fit: " + std::to_string(xi.rows()) +
                               " usable samples for " + std::to_string(m) +
                               " hyper-parameters; need at least " + std::to_string(m + 1));
  }
  std::vector<PolyFamily> family(m, PolyFamily::legendre);
  double lambda = 0.0;
  if (cfg.lambda) {
    lambda = *cfg.lambda;
  } else {
    const auto basis = total_order_basis(m, cfg.pce_order);
    const Matrix design = design_matrix(xi, basis, box, family);
    lambda = cross_validate_lambda(design, p, stream).best_lambda;
  }
  PCESurrogate s = fit_surrogate(xi, p, box, std::move(family), cfg.pce_order, lambda);
  return {std::move(s), lambda};
}

RunArtifacts run_double_loop(const ExperimentConfig& cfg) {
  cfg.validate();
  const RandomStream root(cfg.seed, 0);
  const UniformBox box = cfg.box();
  const InnerSetup setup = prepare_inner(cfg);

  RandomStream design_stream = root.substream(kDesignStream);
  const Matrix design = lhs_sample(box, cfg.n_samp, design_stream);
  const auto est = estimate_rows(cfg, setup, design, root.substream(kSampleStream));

  RunArtifacts art;
  art.config = cfg;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < est.size(); ++j) {
    art.diagnostics.push_back({j, est[j].levels, est[j].n_evals, est[j].excluded, est[j].reason});
    art.total_evals += est[j].n_evals;
    if (est[j].excluded) {
      ++art.n_excluded;
    } else {
      keep.push_back(j);
      art.p_hats.push_back(est[j].p_hat);
    }
  }
  check_exclusions(art.n_excluded, est.size());
  art.xi_samples = select_rows(design, keep);

  RandomStream fit_stream = root.substream(kFitStream);
  auto [surrogate, lambda] = fit_probability_surrogate(cfg, art.xi_samples, art.p_hats, fit_stream);
  art.surrogate = std::move(surrogate);
  art.lambda_used = lambda;
  art.sobol = sobol_report(art.surrogate, box.dim() <= 12);
  return art;
}

VariabilityTable variability_study(const ExperimentConfig& cfg, std::size_t n_reps) {
  cfg.validate();
  if (n_reps < 2) throw DomainError("variability_study: need at least 2 repetitions");
  const UniformBox box = cfg.box();
  const InnerSetup setup = prepare_inner(cfg);
  const RandomStream root = RandomStream(cfg.seed, 0).substream(kVariabilityStream);

  VariabilityTable t;
  t.budget = cfg.n_samp;
  t.saltelli_base = saltelli_base_size(cfg.n_samp, box.dim());
  if (t.saltelli_base < 2) throw DomainError("variability_study: budget too small for Saltelli");
  t.pce_totals.resize(n_reps);
  t.saltelli_totals.resize(n_reps);

  ExperimentConfig serial = cfg;
  serial.threads = 1;
  parallel_for(n_reps, cfg.threads, [&](std::size_t r) {
    const RandomStream rep = root.substream(r);
    RandomStream design_stream = rep.substream(0);
    const Matrix design = lhs_sample(box, cfg.n_samp, design_stream);
    const auto est = estimate_rows(serial, setup, design, rep.substream(1));
    RandomStream fit_stream = rep.substream(2);
    t.pce_totals[r] = fitted_totals(serial, design, est, est.size(), fit_stream);

    const RandomStream eval_streams = rep.substream(3);
    std::uint64_t call = 0;
    const Qoi f = [&](std::span<const double> xi) {
      RandomStream s = eval_streams.substream(call++);
      return estimate_with(serial, setup, xi, s).p_hat;
    };
    RandomStream saltelli_stream = rep.substream(4);
    t.saltelli_totals[r] =
        saltelli_sobol(f, box, t.saltelli_base, saltelli_stream, DesignKind::latin_hypercube).total;
  });
  t.pce_mean = column_mean(t.pce_totals);
  t.pce_std = sample_std(t.pce_totals, t.pce_mean);
  t.saltelli_mean = column_mean(t.saltelli_totals);
  t.saltelli_std = sample_std(t.saltelli_totals, t.saltelli_mean);
  return t;
}

std::vector<SweepCell> budget_sweep(const ExperimentConfig& cfg,
                                    const std::vector<std::size_t>& n_ss_grid,
                                    const std::vector<std::size_t>& n_samp_grid,
                                    std::size_t n_reps) {
  cfg.validate();
  if (n_ss_grid.empty() || n_samp_grid.empty()) throw DomainError("budget_sweep: empty grid");
  if (n_reps < 1) throw DomainError("budget_sweep: need at least one repetition");
  const std::size_t n_max = *std::ranges::max_element(n_samp_grid);
  if (std::ranges::find(n_samp_grid, std::size_t{0}) != n_samp_grid.end()) {
    throw DomainError("budget_sweep: N_samp values must be >= 1");
  }
  const UniformBox box = cfg.box();
  const InnerSetup setup = prepare_inner(cfg);
  const RandomStream root = RandomStream(cfg.seed, 0).substream(kSweepStream);

  // totals[cell][rep]
  std::vector<std::vector<std::vector<double>>> totals(n_ss_grid.size() * n_samp_grid.size(),
                                                       std::vector<std::vector<double>>(n_reps));
  for (std::size_t r = 0; r < n_reps; ++r) {
    const RandomStream rep = root.substream(r);
    RandomStream design_stream = rep.substream(0);
    const Matrix design = lhs_sample(box, n_max, design_stream);
    for (std::size_t a = 0; a < n_ss_grid.size(); ++a) {
      ExperimentConfig c = cfg;
      c.ss.n_per_level = n_ss_grid[a];
      c.validate();
      const auto est = estimate_rows(c, setup, design, rep.substream(1 + a));
      for (std::size_t b = 0; b < n_samp_grid.size(); ++b) {
        RandomStream fit_stream = rep.substream(1000 + a * n_samp_grid.size() + b);
        totals[a * n_samp_grid.size() + b][r] = fitted_totals(c, design, est, n_samp_grid[b], fit_stream);
      }
    }
  }
  std::vector<SweepCell> out;
  for (std::size_t a = 0; a < n_ss_grid.size(); ++a) {
    for (std::size_t b = 0; b < n_samp_grid.size(); ++b) {
      const auto& rows = totals[a * n_samp_grid.size() + b];
      SweepCell cell{n_ss_grid[a], n_samp_grid[b], column_mean(rows), {}};
      cell.std_total = sample_std(rows, cell.mean_total);
      out.push_back(std::move(cell));
    }
  }
  return out;
}

// ---- persistence ----

void write_artifacts(const RunArtifacts& a, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  json manifest;
  manifest["format"] = "raresobol.run";
  manifest["code_version"] = kVersion;
  manifest["seed"] = a.config.seed;
  manifest["config"] = config_to_json(a.config);
  manifest["n_samp"] = a.diagnostics.size();
  manifest["n_retained"] = a.p_hats.size();
  manifest["n_excluded"] = a.n_excluded;
  manifest["total_evals"] = a.total_evals;
  manifest["lambda_used"] = a.lambda_used;
  manifest["files"] = {"xi_samples.csv", "p_hats.csv", "diagnostics.csv", "surrogate.json",
                       "sobol.json"};
  open_write(root / "manifest.json") << manifest.dump(2) << '\n';

  {
    auto out = open_write(root / "xi_samples.csv");
    for (Index c = 0; c < a.xi_samples.cols(); ++c) out << (c ? "," : "") << "xi_" << c + 1;
    out << '\n';
    for (Index r = 0; r < a.xi_samples.rows(); ++r) {
      for (Index c = 0; c < a.xi_samples.cols(); ++c) {
        out << (c ? "," : "") << format_double(a.xi_samples(r, c));
      }
      out << '\n';
    }
  }
  {
    auto out = open_write(root / "p_hats.csv");
    out << "p_hat\n";
    for (double p : a.p_hats) out << format_double(p) << '\n';
  }
  {
    auto out = open_write(root / "diagnostics.csv");
    out << "index,levels,n_evals,excluded,reason\n";
    for (const auto& d : a.diagnostics) {
      out << d.index << ',' << d.levels << ',' << d.n_evals << ',' << (d.excluded ? 1 : 0) << ','
          << d.reason << '\n';
    }
  }
  open_write(root / "surrogate.json") << to_json(a.surrogate);
  open_write(root / "sobol.json") << to_json(a.sobol);
}

RunArtifacts read_artifacts(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  RunArtifacts a;

  const fs::path mpath = root / "manifest.json";
  try {
    const json m = json::parse(read_file(mpath));
    a.config = config_from_json(m.at("config").dump());
    a.n_excluded = m.at("n_excluded").get<std::size_t>();
    a.total_evals = m.at("total_evals").get<std::size_t>();
    a.lambda_used = m.at("lambda_used").get<double>();
  } catch (const json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }

  std::vector<std::string> header;
  const fs::path xpath = root / "xi_samples.csv";
  const auto xrows = read_csv(xpath, header);
  a.xi_samples.resize(static_cast<Index>(xrows.size()), static_cast<Index>(header.size()));
  for (std::size_t r = 0; r < xrows.size(); ++r) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      a.xi_samples(static_cast<Index>(r), static_cast<Index>(c)) = parse_double(xrows[r][c], xpath);
    }
  }

  const fs::path ppath = root / "p_hats.csv";
  for (const auto& row : read_csv(ppath, header)) a.p_hats.push_back(parse_double(row[0], ppath));
  if (a.p_hats.size() != xrows.size()) {
    throw IoError(ppath.string() + ": row count differs from xi_samples.csv");
  }

  const fs::path dpath = root / "diagnostics.csv";
  for (const auto& row : read_csv(dpath, header)) {
    if (row.size() != 5) throw IoError(dpath.string() + ": expected 5 columns");
    a.diagnostics.push_back({parse_size(row[0], dpath), parse_size(row[1], dpath),
                             parse_size(row[2], dpath), row[3] == "1", row[4]});
  }

  try {
    a.surrogate = surrogate_from_json(read_file(root / "surrogate.json"));
  } catch (const IoError& e) {
    throw IoError((root / "surrogate.json").string() + ": " + e.what());
  }
  try {
    a.sobol = sobol_report_from_json(read_file(root / "sobol.json"));
  } catch (const IoError& e) {
    throw IoError((root / "sobol.json").string() + ": " + e.what());
  }
  return a;
}

}  // namespace raresobol
