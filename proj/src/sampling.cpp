#include "raresobol/sampling.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "raresobol/errors.hpp"

namespace raresobol {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void check_design_size(std::size_t n) {
  if (n == 0) throw DomainError("empty design: sample count must be >= 1");
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + mix64(stream_id + kGolden))) {}

std::uint64_t RandomStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RandomStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection of the biased low range.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const auto m = static_cast<unsigned __int128>(next_u64()) * n;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

RandomStream RandomStream::substream(std::uint64_t k) const noexcept {
  return RandomStream(seed_, mix64(stream_id_ * kGolden + mix64(k + 1)));
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal_quantile: u must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

double standard_normal(RandomStream& stream) {
  return normal_quantile(stream.uniform());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

UniformBox::UniformBox(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw DomainError("UniformBox: bounds must be nonempty and of equal length");
  }
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw DomainError("UniformBox: lower[" + std::to_string(i) +
                        "] must be < upper[" + std::to_string(i) + "]");
    }
  }
}

UniformBox UniformBox::around(std::span<const double> nominal, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError("UniformBox::around: fraction must lie in (0,1)");
  }
  std::vector<double> lo(nominal.size()), hi(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    const double half = fraction * std::abs(nominal[i]);
    lo[i] = nominal[i] - half;
    hi[i] = nominal[i] + half;
  }
  return UniformBox(std::move(lo), std::move(hi));
}

bool UniformBox::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (x[i] < lower_[i] || x[i] > upper_[i]) return false;
  }
  return true;
}

Matrix lhs_sample(const UniformBox& box, std::size_t n, RandomStream& stream) {
  check_design_size(n);
  const std::size_t dim = box.dim();
  Matrix out(n, dim);
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[stream.uniform_index(i)]);
    }
    const double w = box.width(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + stream.uniform()) /
                       static_cast<double>(n);
      out(i, j) = box.lower()[j] + u * w;
    }
  }
  return out;
}

Matrix uniform_box_sample(const UniformBox& box, std::size_t n,
                          RandomStream& stream) {
  check_design_size(n);
  Matrix out(n, box.dim());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < box.dim(); ++j) {
      out(i, j) = box.lower()[j] + stream.uniform() * box.width(j);
    }
  }
  return out;
}

}  // namespace raresobol
