#pragma once

// Test-only reference computations. Nothing here calls into the library's
// special functions, so these stay independent of the code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth = 50) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Integral over consecutive breakpoints, each piece to tol / pieces.
inline double piecewise_simpson(const std::function<double(double)>& f, std::vector<double> breaks,
                                double tol) {
  std::sort(breaks.begin(), breaks.end());
  double acc = 0.0;
  const double piece_tol = tol / static_cast<double>(std::max<std::size_t>(1, breaks.size() - 1));
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    acc += adaptive_simpson(f, breaks[i], breaks[i + 1], piece_tol);
  }
  return acc;
}

// E|Z - z| for Z ~ N(0, 1) by quadrature of |x - z| phi(x) over [-40, 40],
// split at z so each piece is smooth.
inline double expected_abs_deviation(double z) {
  auto f = [z](double x) { return std::fabs(x - z) * normal_pdf(x); };
  return piecewise_simpson(f, {-40.0, std::min(z, 0.0) - 1.0, z, std::max(z, 0.0) + 1.0, 40.0}, 1e-13);
}

// Integral of |Phi(x) - F_emp(x)| over a window covering both the sample and
// [-40, 40]; split at every sample point so each piece has a constant step level.
inline double cdf_gap_integral(std::span<const double> xs, double tol = 1e-11) {
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  std::vector<double> breaks = s;
  breaks.push_back(std::min(s.front() - 10.0, -40.0));
  breaks.push_back(std::max(s.back() + 10.0, 40.0));
  breaks.push_back(0.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  // The step level is constant inside each piece; read it at the midpoint.
  double acc = 0.0;
  const double piece_tol = tol / static_cast<double>(breaks.size());
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const double level = static_cast<double>(std::upper_bound(s.begin(), s.end(), 0.5 * (a + b)) - s.begin()) / n;
    auto g = [level](double x) { return std::fabs(normal_cdf(x) - level); };
    acc += adaptive_simpson(g, a, b, piece_tol);
  }
  return acc;
}

// Central finite difference of f at x.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace oracle
