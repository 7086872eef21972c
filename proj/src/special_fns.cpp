#include "perreg/special_fns.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace perreg {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kTwoOverSqrtPi = 1.12837916709551257389615890312;
constexpr double kInvSqrtPi = 0.564189583547756286948079451561;

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)).
// Every term is positive, so there is no cancellation.
double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return kTwoOverSqrtPi * std::exp(-x2) * sum;
}

// erfc(x) for x >= 2.5 by modified Lentz evaluation of
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
double erfc_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi * std::exp(-x * x) / f;
}

constexpr double kSeriesCutoff = 2.5;
constexpr double kSaturation = 6.0;

}  // namespace

RngStream RngStream::split(std::uint64_t child) const {
  return RngStream(seed_, mix64(stream_id_ ^ mix64(child + kGolden)) + 1);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t key = mix64(seed_ ^ mix64(stream_id_ * kGolden + 0x632be59bd9b4e019ULL));
  return mix64(key + (++counter_) * kGolden);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::domain_error("RngStream::below: empty range");
  // Rejection keeps the result unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return r % n;
}

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - uniform() lies in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  double r;
  if (ax < kSeriesCutoff) {
    r = erf_series(ax);
  } else if (ax < kSaturation) {
    r = 1.0 - erfc_continued_fraction(ax);
  } else {
    r = 1.0;
  }
  return x < 0 ? -r : r;
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x >= kSeriesCutoff) return erfc_continued_fraction(x);
  if (x > -kSeriesCutoff) return 1.0 - erf(x);
  if (x > -kSaturation) return 2.0 - erfc_continued_fraction(-x);
  return 2.0;
}

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf(double x) {
  if (x >= 0) return 1.0 - 0.5 * erfc(x / kSqrt2);
  return 0.5 * erfc(-x / kSqrt2);
}

namespace {

// Rational approximation with relative error about 1e-9 (P. J. Acklam);
// valid for 0 < p <= 0.5.
double quantile_initial_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double quantile_lower(double p) {
  if (p == 0.5) return 0.0;
  double x = quantile_initial_lower(p);
  // Halley refinement on cdf(x) - p.
  for (int it = 0; it < 16; ++it) {
    const double pdf = std_normal_pdf(x);
    if (pdf == 0.0) break;
    const double u = (std_normal_cdf(x) - p) / pdf;
    const double step = u / (1.0 + 0.5 * x * u);
    x -= step;
    if (std::fabs(step) <= 1e-16 * std::max(1.0, std::fabs(x))) break;
  }
  return x;
}

}  // namespace

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("std_normal_quantile: p must lie in (0, 1)");
  }
  // 1 - p is exact for p >= 0.5, which makes the result antisymmetric.
  if (p > 0.5) return -quantile_lower(1.0 - p);
  return quantile_lower(p);
}

std::vector<double> sample_standard_gaussian(RngStream& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.gaussian();
  return out;
}

std::vector<double> sample_unit_sphere(RngStream& rng, std::size_t d) {
  if (d == 0) throw std::domain_error("sample_unit_sphere: dimension must be >= 1");
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    double sq = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      sq += x * x;
    }
    norm = std::sqrt(sq);
  } while (norm < 1e-300);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace perreg
