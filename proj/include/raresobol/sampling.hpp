#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace raresobol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Counter-based pseudo-random source.
///
/// The i-th 64-bit output of a stream is a SplitMix64 finalizer applied to
/// `key + i * golden_gamma`, where `key` is derived from (seed, stream_id).
/// Position is therefore a plain counter: streams can be split, copied and
/// moved across threads, and any (seed, stream_id) pair reproduces the same
/// sequence bit-for-bit. A stream is single-owner state and must not be
/// shared concurrently.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;

  /// Independent child stream; deterministic in (seed, stream_id, k).
  RandomStream substream(std::uint64_t k) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal variate by inverse-CDF transform of one uniform draw.
double standard_normal(RandomStream& stream);

/// Inverse of the standard normal CDF on (0, 1).
double normal_quantile(double u);

/// Standard normal CDF and density.
double normal_cdf(double x);
double normal_pdf(double x);

/// Axis-aligned box carrying a product of independent uniform laws.
class UniformBox {
 public:
  UniformBox(std::vector<double> lower, std::vector<double> upper);

  /// Box [x - f|x|, x + f|x|] around each nominal component; f in (0, 1).
  static UniformBox around(std::span<const double> nominal, double fraction);

  std::size_t dim() const noexcept { return lower_.size(); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  double width(std::size_t i) const { return upper_[i] - lower_[i]; }
  double midpoint(std::size_t i) const { return 0.5 * (lower_[i] + upper_[i]); }
  bool contains(std::span<const double> x) const;

  bool operator==(const UniformBox&) const = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Latin hypercube design: n rows, one per stratum in every column.
Matrix lhs_sample(const UniformBox& box, std::size_t n, RandomStream& stream);

/// Plain i.i.d. uniform design over the box.
Matrix uniform_box_sample(const UniformBox& box, std::size_t n,
                          RandomStream& stream);

}  // namespace raresobol
