#include "raresobol/subset_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "raresobol/errors.hpp"
#include "raresobol/parallel.hpp"

namespace raresobol {
namespace {

// floor() of a product or ratio that is meant to be an exact integer, e.g.
// 1000 * 0.1 or 1 / 0.1, without losing one to representation error.
std::size_t robust_floor(double x) {
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

std::size_t cut_size(std::size_t n, double p0) {
  return robust_floor(static_cast<double>(n) * p0);
}

}  // namespace

void SSConfig::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("SSConfig: p0 must lie in (0,1)");
  if (cut_size(n_per_level, p0) < 1) {
    throw DomainError("SSConfig: n_per_level * p0 must be >= 1");
  }
  if (max_levels < 1) throw DomainError("SSConfig: max_levels must be >= 1");
  if (!(proposal_spread >= 0.0)) {
    throw DomainError("SSConfig: proposal_spread must be >= 0");
  }
}

QuantileCut quantile_threshold(std::span<const double> samples, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("quantile_threshold: p0 must lie in (0,1)");
  const std::size_t n = samples.size();
  if (static_cast<double>(n) * p0 < 1.0 - 1e-9) {
    throw DomainError("quantile_threshold: need at least ceil(1/p0) samples");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) {
    return samples[a] > samples[b];
  });

  std::size_t m = std::min(cut_size(n, p0), n - 1);
  while (m > 0 && !(samples[order[m - 1]] > samples[order[m]])) --m;
  if (m == 0) {
    throw DegenerateLevelError("quantile_threshold: no strict gap at or above the p0 cut");
  }
  const double above = samples[order[m - 1]];
  const double below = samples[order[m]];
  double tau = 0.5 * (above + below);
  if (!(tau < above)) tau = below;  // adjacent doubles

  QuantileCut cut;
  cut.tau = tau;
  cut.seed_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  return cut;
}

std::vector<LevelSample> mma_chain(const LevelSample& seed, std::size_t chain_len,
                                   double level, const Qoi& qoi,
                                   double proposal_spread, RandomStream& stream,
                                   std::size_t* evals) {
  std::vector<LevelSample> chain;
  if (chain_len == 0) return chain;
  chain.reserve(chain_len);
  chain.push_back(seed);

  const std::size_t dim = seed.theta.size();
  LevelSample current = seed;
  std::vector<double> candidate(dim);
  for (std::size_t step = 1; step < chain_len; ++step) {
    bool moved = false;
    for (std::size_t k = 0; k < dim; ++k) {
      const double x = current.theta[k];
      const double proposal = x + proposal_spread * standard_normal(stream);
      const double u = stream.uniform();
      if (u < std::exp(-0.5 * (proposal * proposal - x * x))) {
        candidate[k] = proposal;
        moved = moved || proposal != x;
      } else {
        candidate[k] = x;
      }
    }
    if (moved) {
      const double q = qoi(candidate);
      if (evals != nullptr) ++*evals;
      if (q > level) {
        current.theta = candidate;
        current.q = q;
      }
    }
    chain.push_back(current);
  }
  return chain;
}

SSResult run_subset_simulation(const Qoi& qoi, std::size_t dim,
                               const SSConfig& cfg, RandomStream& stream) {
  cfg.validate();
  if (dim == 0) throw DomainError("run_subset_simulation: input dimension must be >= 1");
  const std::size_t chain_len = robust_floor(1.0 / cfg.p0);

  SSResult res;
  std::vector<LevelSample> level(cfg.n_per_level);
  {
    RandomStream s = stream.substream(0);
    for (auto& smp : level) {
      smp.theta.resize(dim);
      for (double& t : smp.theta) t = standard_normal(s);
      smp.q = qoi(smp.theta);
    }
    res.n_evals = level.size();
  }

  std::vector<double> qs;
  double product = 1.0;
  for (std::size_t lvl = 1;; ++lvl) {
    res.n_levels = lvl;
    res.level_sizes.push_back(level.size());
    qs.resize(level.size());
    std::ranges::transform(level, qs.begin(), &LevelSample::q);

    const std::size_t n = level.size();
    const auto above = static_cast<std::size_t>(
        std::ranges::count_if(qs, [&](double q) { return q > cfg.tau; }));
    const double fraction = static_cast<double>(above) / static_cast<double>(n);

    QuantileCut cut;
    bool reached = false;
    try {
      cut = quantile_threshold(qs, cfg.p0);
      reached = cut.tau >= cfg.tau;
    } catch (const DegenerateLevelError&) {
      // A level whose tied top values already exceed the target is done.
      if (above < std::max<std::size_t>(1, cut_size(n, cfg.p0))) throw;
      reached = true;
    }

    if (reached || lvl == cfg.max_levels) {
      res.final_fraction = fraction;
      res.p_hat = product * fraction;
      if (reached) {
        res.thresholds.push_back(cfg.tau);
      } else {
        res.thresholds.push_back(cut.tau);
        res.terminated_early = true;
      }
      return res;
    }

    res.thresholds.push_back(cut.tau);
    const std::size_t n_chains = cut.seed_indices.size();
    product *= static_cast<double>(n_chains) / static_cast<double>(n);

    std::vector<std::vector<LevelSample>> chains(n_chains);
    std::vector<std::size_t> chain_evals(n_chains, 0);
    const RandomStream level_stream = stream.substream(lvl);
    parallel_for(n_chains, cfg.threads, [&](std::size_t c) {
      RandomStream s = level_stream.substream(c);
      chains[c] = mma_chain(level[cut.seed_indices[c]], chain_len, cut.tau, qoi,
                            cfg.proposal_spread, s, &chain_evals[c]);
    });

    std::vector<LevelSample> next;
    next.reserve(n_chains * chain_len);
    for (std::size_t c = 0; c < n_chains; ++c) {
      res.n_evals += chain_evals[c];
      std::ranges::move(chains[c], std::back_inserter(next));
    }
    level = std::move(next);
  }
}

std::size_t expected_levels(double p, double p0) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("expected_levels: p must lie in (0,1)");
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("expected_levels: p0 must lie in (0,1)");
  return robust_floor(std::log(p) / std::log(p0));
}

}  // namespace raresobol
