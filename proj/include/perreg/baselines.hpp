#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "perreg/matrix.hpp"

namespace perreg {

struct PenaltyResult {
  double loss = 0.0;
  Matrix grad;
};

// L^p activation penalty, p in {1, 2}:
//   loss = lambda (1/b) sum_ij |h_ij|^p
//   grad = lambda (1/b) p sign(h) |h|^(p-1)
// For p = 1 the subgradient at exactly 0 is 0.
PenaltyResult lp_activation_penalty(const Matrix& batch, int p, double lambda);

// Centres a column and divides by its p-th absolute central moment raised to
// 1/p. The divisor is floored at `epsilon`, so a constant column maps to
// zeros. Requires b >= 2 and p >= 1 (std::domain_error otherwise).
std::vector<double> lp_normalize(std::span<const double> column, double p,
                                 double epsilon = 1e-5);

// Per-unit normalization state. With order_p = 2 this is batch
// normalization; running_var then tracks the (biased) batch variance, and in
// general the p-th absolute central moment.
struct BnState {
  explicit BnState(std::size_t dim = 0)
      : gamma(dim, 1.0), beta(dim, 0.0), running_mean(dim, 0.0), running_var(dim, 1.0) {}

  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  double order_p = 2.0;

  std::size_t dim() const { return gamma.size(); }
};

struct BnCache {
  Matrix normalized;               // xi
  Matrix centred;                  // h - mean (training) or h - running_mean (eval)
  std::vector<double> scale;       // per-column divisor actually used
  std::vector<bool> floored;       // divisor hit epsilon
  std::vector<double> gamma;
  double order_p = 2.0;
  bool training = true;
};

struct BnForwardResult {
  Matrix out;
  BnCache cache;
};

// out = gamma * xi(batch) + beta, column-wise. Training mode normalizes
// with batch statistics and updates the running moments; evaluation mode
// uses the running moments. Training with b = 1 throws std::domain_error.
BnForwardResult bn_forward(const Matrix& batch, BnState& state, bool training);

struct BnGradients {
  Matrix input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

// Exact gradients of the forward map recorded in `cache`.
BnGradients bn_backward(const Matrix& upstream, const BnCache& cache);

// Reference curves: h(x) = x^2/2 for |x| <= 1 and |x| - 1/2 beyond;
// g(x) = sqrt(1 + x^2) - 1.
double huber(double x);
double pseudo_huber(double x);

}  // namespace perreg
