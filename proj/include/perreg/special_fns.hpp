#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

namespace perreg {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
// sqrt(2/pi), the value of E|Z| for a standard normal Z.
inline constexpr double kSqrt2OverPi = 0.797884560802865355879892119869;

// Counter-based splittable generator. The n-th output is a fixed function of
// (seed, stream_id, n), so a stream can be copied, split and replayed on any
// platform with identical results.
class RngStream {
 public:
  RngStream() = default;
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  // Child stream with a derived id, starting at counter zero. Splitting does
  // not advance the parent.
  RngStream split(std::uint64_t child) const;
  RngStream split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double gaussian();

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Gauss error function, absolute error below 1e-15 on the reals. Positive
// Taylor-type series with an exp(-x^2) prefactor for |x| < 2.5, Lentz
// continued fraction for erfc beyond, exact saturation for |x| >= 6.
double erf(double x);
double erfc(double x);

double std_normal_pdf(double x);
double std_normal_cdf(double x);
// Inverse of std_normal_cdf. Throws std::domain_error unless 0 < p < 1.
double std_normal_quantile(double p);

std::vector<double> sample_standard_gaussian(RngStream& rng, std::size_t n);
// Uniform direction on the unit sphere in R^d (normalized Gaussian draw).
std::vector<double> sample_unit_sphere(RngStream& rng, std::size_t d);

}  // namespace perreg
