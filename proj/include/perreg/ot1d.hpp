#pragma once

#include <span>

namespace perreg {

// A one-dimensional sample (for instance projected activations) is passed
// as a span of finite doubles; inputs are never modified. Non-finite
// entries are rejected with std::domain_error.

// W1 between two equal-size empirical measures on the line:
// (1/b) sum_k |x_(k) - y_(k)| over order statistics.
// Throws std::domain_error on empty input or a length mismatch.
double w1_empirical_empirical(std::span<const double> xs, std::span<const double> ys);

// Exact W1 between the empirical measure of `xs` and N(0, 1), i.e. the
// integral of |Phi(x) - F_emp(x)| over the real line, evaluated piecewise
// with the antiderivative x Phi(x) + phi(x).
// Throws std::domain_error on empty input.
double w1_empirical_gaussian(std::span<const double> xs);

}  // namespace perreg
