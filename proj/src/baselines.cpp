#include "perreg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace perreg {
namespace {

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double mean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double abs_central_moment(std::span<const double> centred, double p) {
  double acc = 0.0;
  if (p == 2.0) {
    for (double x : centred) acc += x * x;
  } else {
    for (double x : centred) acc += std::pow(std::fabs(x), p);
  }
  return acc / static_cast<double>(centred.size());
}

double moment_root(double moment, double p) {
  return p == 2.0 ? std::sqrt(moment) : std::pow(moment, 1.0 / p);
}

}  // namespace

PenaltyResult lp_activation_penalty(const Matrix& batch, int p, double lambda) {
  if (p != 1 && p != 2) throw std::domain_error("lp_activation_penalty: p must be 1 or 2");
  if (!(lambda >= 0.0)) throw std::domain_error("lp_activation_penalty: lambda must be >= 0");
  PenaltyResult r{0.0, Matrix(batch.rows(), batch.cols())};
  if (batch.rows() == 0) return r;
  const double scale = lambda / static_cast<double>(batch.rows());
  const auto h = batch.flat();
  auto g = r.grad.flat();
  double acc = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    if (p == 1) {
      acc += std::fabs(h[n]);
      g[n] = scale * sign(h[n]);
    } else {
      acc += h[n] * h[n];
      g[n] = scale * 2.0 * h[n];
    }
  }
  r.loss = scale * acc;
  return r;
}

std::vector<double> lp_normalize(std::span<const double> column, double p, double epsilon) {
  if (column.size() < 2) throw std::domain_error("lp_normalize: need at least two values");
  if (!(p >= 1.0)) throw std::domain_error("lp_normalize: p must be >= 1");
  const double mu = mean(column);
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) out[i] = column[i] - mu;
  const double divisor = std::max(moment_root(abs_central_moment(out, p), p), epsilon);
  for (double& x : out) x /= divisor;
  return out;
}

BnForwardResult bn_forward(const Matrix& batch, BnState& state, bool training) {
  const std::size_t b = batch.rows();
  const std::size_t d = batch.cols();
  if (state.dim() != d) {
    throw std::domain_error("bn_forward: state dimension " + std::to_string(state.dim()) +
                            " does not match batch dimension " + std::to_string(d));
  }
  if (training && b < 2) {
    throw std::domain_error("bn_forward: training mode needs at least two samples");
  }
  const double p = state.order_p;
  BnForwardResult r{Matrix(b, d), BnCache{}};
  BnCache& c = r.cache;
  c.normalized = Matrix(b, d);
  c.centred = Matrix(b, d);
  c.scale.assign(d, 0.0);
  c.floored.assign(d, false);
  c.gamma = state.gamma;
  c.order_p = p;
  c.training = training;

  for (std::size_t j = 0; j < d; ++j) {
    auto col = batch.column(j);
    double mu;
    double moment;
    if (training) {
      mu = mean(col);
      for (double& x : col) x -= mu;
      moment = abs_central_moment(col, p);
      state.running_mean[j] = (1.0 - state.momentum) * state.running_mean[j] + state.momentum * mu;
      state.running_var[j] = (1.0 - state.momentum) * state.running_var[j] + state.momentum * moment;
    } else {
      mu = state.running_mean[j];
      for (double& x : col) x -= mu;
      moment = std::max(state.running_var[j], 0.0);
    }
    double divisor = moment_root(moment, p);
    if (divisor < state.epsilon) {
      divisor = state.epsilon;
      c.floored[j] = true;
    }
    c.scale[j] = divisor;
    for (std::size_t i = 0; i < b; ++i) {
      c.centred(i, j) = col[i];
      const double xi = col[i] / divisor;
      c.normalized(i, j) = xi;
      r.out(i, j) = state.gamma[j] * xi + state.beta[j];
    }
  }
  return r;
}

BnGradients bn_backward(const Matrix& upstream, const BnCache& cache) {
  require_same_shape(upstream, cache.normalized, "bn_backward");
  const std::size_t b = upstream.rows();
  const std::size_t d = upstream.cols();
  const double p = cache.order_p;
  const double inv_b = 1.0 / static_cast<double>(b);
  BnGradients g{Matrix(b, d), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};

  std::vector<double> dxi(b);
  std::vector<double> dcentred(b);
  for (std::size_t j = 0; j < d; ++j) {
    double xi_dot = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      g.beta[j] += upstream(i, j);
      g.gamma[j] += upstream(i, j) * cache.normalized(i, j);
      dxi[i] = upstream(i, j) * cache.gamma[j];
      xi_dot += dxi[i] * cache.normalized(i, j);
    }
    const double sigma = cache.scale[j];
    if (!cache.training) {
      for (std::size_t i = 0; i < b; ++i) g.input(i, j) = dxi[i] / sigma;
      continue;
    }
    // d sigma / d centred_k = sigma^(1-p) / b * |c_k|^(p-1) sign(c_k), zero
    // when the divisor is floored.
    const double coupling = cache.floored[j] ? 0.0 : xi_dot * std::pow(sigma, -p) * inv_b;
    double mean_dc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const double c = cache.centred(i, j);
      double dsigma_shape;
      if (p == 2.0) {
        dsigma_shape = c;
      } else {
        dsigma_shape = (c == 0.0) ? 0.0 : std::pow(std::fabs(c), p - 1.0) * sign(c);
      }
      dcentred[i] = dxi[i] / sigma - coupling * dsigma_shape;
      mean_dc += dcentred[i];
    }
    mean_dc *= inv_b;
    for (std::size_t i = 0; i < b; ++i) g.input(i, j) = dcentred[i] - mean_dc;
  }
  return g;
}

double huber(double x) {
  const double a = std::fabs(x);
  return a <= 1.0 ? 0.5 * x * x : a - 0.5;
}

double pseudo_huber(double x) { return std::sqrt(1.0 + x * x) - 1.0; }

}  // namespace perreg
