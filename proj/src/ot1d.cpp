#include "perreg/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "perreg/special_fns.hpp"

namespace perreg {
namespace {

// Antiderivative of Phi: d/dx [x Phi(x) + phi(x)] = Phi(x), with limit 0 at -inf.
double cdf_antiderivative(double x) { return x * std_normal_cdf(x) + std_normal_pdf(x); }

// Signed integral of Phi(x) - level over [a, c].
double signed_gap(double a, double c, double level) {
  return cdf_antiderivative(c) - cdf_antiderivative(a) - level * (c - a);
}

std::vector<double> sorted_copy(std::span<const double> xs) {
  std::vector<double> v(xs.begin(), xs.end());
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("ot1d: sample contains a non-finite value");
  }
  std::stable_sort(v.begin(), v.end());
  return v;
}

}  // namespace

double w1_empirical_empirical(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::domain_error("w1_empirical_empirical: empty sample");
  if (xs.size() != ys.size()) {
    throw std::domain_error("w1_empirical_empirical: samples must have equal length");
  }
  const auto sx = sorted_copy(xs);
  const auto sy = sorted_copy(ys);
  double acc = 0.0;
  for (std::size_t k = 0; k < sx.size(); ++k) acc += std::fabs(sx[k] - sy[k]);
  return acc / static_cast<double>(sx.size());
}

double w1_empirical_gaussian(std::span<const double> xs) {
  if (xs.empty()) throw std::domain_error("w1_empirical_gaussian: empty sample");
  const auto s = sorted_copy(xs);
  const std::size_t b = s.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  // (-inf, x_(1)]: F_emp = 0, the gap is Phi itself.
  double total = cdf_antiderivative(s.front());

  for (std::size_t k = 1; k < b; ++k) {
    const double a = s[k - 1];
    const double c = s[k];
    if (c == a) continue;
    const double level = static_cast<double>(k) * inv_b;
    const bool below_at_a = std_normal_cdf(a) < level;
    const bool below_at_c = std_normal_cdf(c) < level;
    if (below_at_a && !below_at_c) {
      const double cross = std::clamp(std_normal_quantile(level), a, c);
      total += -signed_gap(a, cross, level) + signed_gap(cross, c, level);
    } else {
      total += std::fabs(signed_gap(a, c, level));
    }
  }

  // [x_(b), inf): F_emp = 1; integral of 1 - Phi equals the antiderivative at -x.
  total += cdf_antiderivative(-s.back());
  return total;
}

}  // namespace perreg
