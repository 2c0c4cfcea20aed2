#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "raresobol/pce.hpp"

namespace raresobol {

/// Variance-based indices read off an orthonormal PCE. Every index is a ratio
/// of squared-coefficient masses over the non-constant terms.
struct SobolReport {
  std::vector<double> first_order;
  std::vector<double> total;
  double mean = 0.0;
  double variance = 0.0;
  /// Keyed by 0-based variable subsets. "closed": terms supported within u;
  /// "interaction": terms whose support is exactly u.
  std::optional<std::map<std::vector<std::size_t>, double>> closed_subsets;
  std::optional<std::map<std::vector<std::size_t>, double>> interaction_subsets;
};

/// S_i: mass of the terms that depend on xi_i alone.
std::vector<double> first_order_indices(const PCESurrogate& surrogate);

/// T_i: mass of every term that depends on xi_i.
std::vector<double> total_indices(const PCESurrogate& surrogate);

enum class SubsetKind { closed, interaction };

/// Index of a nonempty subset u of 0-based variable positions.
double subset_index(const PCESurrogate& surrogate, const std::vector<std::size_t>& u,
                    SubsetKind kind = SubsetKind::closed);

/// First-order and total indices, mean and variance; with `all_subsets`,
/// closed and interaction indices for every nonempty subset (M <= 12).
SobolReport sobol_report(const PCESurrogate& surrogate, bool all_subsets = false);

std::string to_json(const SobolReport& report);
SobolReport sobol_report_from_json(const std::string& text);

}  // namespace raresobol
