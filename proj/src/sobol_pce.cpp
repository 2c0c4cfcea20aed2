#include "raresobol/sobol_pce.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

#include <json.hpp>

#include "raresobol/errors.hpp"

namespace raresobol {
namespace {

double nonconstant_mass(const PCESurrogate& s) {
  const double v = s.variance();
  if (!(v > 0.0)) throw UndefinedIndicesError("Sobol' indices: surrogate is constant");
  return v;
}

// Bit mask of the variables a term depends on.
std::uint64_t support_mask(const MultiIndex& mi) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < mi.orders.size(); ++i) {
    if (mi.orders[i] != 0) mask |= std::uint64_t{1} << i;
  }
  return mask;
}

std::uint64_t subset_mask(const std::vector<std::size_t>& u, std::size_t dim) {
  if (u.empty()) throw DomainError("subset_index: subset must be nonempty");
  std::uint64_t mask = 0;
  for (std::size_t i : u) {
    if (i >= dim) throw DomainError("subset_index: variable index out of range");
    mask |= std::uint64_t{1} << i;
  }
  return mask;
}

void check_dim(const PCESurrogate& s) {
  if (s.dim() > 64) throw SizeError("Sobol' indices: at most 64 variables supported");
}

}  // namespace

std::vector<double> first_order_indices(const PCESurrogate& s) {
  check_dim(s);
  const double v = nonconstant_mass(s);
  std::vector<double> out(s.dim(), 0.0);
  for (std::size_t k = 0; k < s.basis.size(); ++k) {
    const std::uint64_t m = support_mask(s.basis[k]);
    if (m != 0 && (m & (m - 1)) == 0) {
      out[static_cast<std::size_t>(std::countr_zero(m))] += s.coeffs[k] * s.coeffs[k];
    }
  }
  for (double& x : out) x /= v;
  return out;
}

std::vector<double> total_indices(const PCESurrogate& s) {
  check_dim(s);
  const double v = nonconstant_mass(s);
  std::vector<double> out(s.dim(), 0.0);
  for (std::size_t k = 0; k < s.basis.size(); ++k) {
    const double c2 = s.coeffs[k] * s.coeffs[k];
    for (std::size_t i = 0; i < s.dim(); ++i) {
      if (s.basis[k].orders[i] != 0) out[i] += c2;
    }
  }
  for (double& x : out) x /= v;
  return out;
}

double subset_index(const PCESurrogate& s, const std::vector<std::size_t>& u,
                    SubsetKind kind) {
  check_dim(s);
  const std::uint64_t target = subset_mask(u, s.dim());
  const double v = nonconstant_mass(s);
  double mass = 0.0;
  for (std::size_t k = 0; k < s.basis.size(); ++k) {
    const std::uint64_t m = support_mask(s.basis[k]);
    if (m == 0) continue;
    const bool hit = kind == SubsetKind::closed ? (m & ~target) == 0 : m == target;
    if (hit) mass += s.coeffs[k] * s.coeffs[k];
  }
  return mass / v;
}

SobolReport sobol_report(const PCESurrogate& s, bool all_subsets) {
  SobolReport r;
  r.first_order = first_order_indices(s);
  r.total = total_indices(s);
  r.mean = s.mean();
  r.variance = s.variance();
  if (all_subsets) {
    if (s.dim() > 12) throw SizeError("sobol_report: subset table limited to 12 variables");
    r.closed_subsets.emplace();
    r.interaction_subsets.emplace();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << s.dim()); ++mask) {
      std::vector<std::size_t> u;
      for (std::size_t i = 0; i < s.dim(); ++i) {
        if (mask & (std::uint64_t{1} << i)) u.push_back(i);
      }
      (*r.closed_subsets)[u] = subset_index(s, u, SubsetKind::closed);
      (*r.interaction_subsets)[u] = subset_index(s, u, SubsetKind::interaction);
    }
  }
  return r;
}

namespace {

nlohmann::json subsets_to_json(const std::map<std::vector<std::size_t>, double>& m) {
  auto arr = nlohmann::json::array();
  for (const auto& [u, val] : m) arr.push_back({{"subset", u}, {"index", val}});
  return arr;
}

std::map<std::vector<std::size_t>, double> subsets_from_json(const nlohmann::json& arr) {
  std::map<std::vector<std::size_t>, double> m;
  for (const auto& e : arr) {
    m[e.at("subset").get<std::vector<std::size_t>>()] = e.at("index").get<double>();
  }
  return m;
}

}  // namespace

std::string to_json(const SobolReport& r) {
  nlohmann::json j;
  j["first_order"] = r.first_order;
  j["total"] = r.total;
  j["mean"] = r.mean;
  j["variance"] = r.variance;
  if (r.closed_subsets) j["closed_subsets"] = subsets_to_json(*r.closed_subsets);
  if (r.interaction_subsets) {
    j["interaction_subsets"] = subsets_to_json(*r.interaction_subsets);
  }
  return j.dump(2) + "\n";
}

SobolReport sobol_report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SobolReport r;
    r.first_order = j.at("first_order").get<std::vector<double>>();
    r.total = j.at("total").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.variance = j.at("variance").get<double>();
    if (j.contains("closed_subsets")) r.closed_subsets = subsets_from_json(j["closed_subsets"]);
    if (j.contains("interaction_subsets")) {
      r.interaction_subsets = subsets_from_json(j["interaction_subsets"]);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("Sobol' report: ") + e.what());
  }
}

}  // namespace raresobol
