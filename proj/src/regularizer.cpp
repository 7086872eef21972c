#include "perreg/regularizer.hpp"

#include <cmath>
#include <stdexcept>

namespace perreg {

std::string_view to_string(RegMethod method) {
  switch (method) {
    case RegMethod::none: return "none";
    case RegMethod::per: return "per";
    case RegMethod::l1: return "l1";
    case RegMethod::l2: return "l2";
    case RegMethod::bn: return "bn";
  }
  return "unknown";
}

std::optional<RegMethod> parse_reg_method(std::string_view name) {
  if (name == "none" || name == "vanilla") return RegMethod::none;
  if (name == "per") return RegMethod::per;
  if (name == "l1") return RegMethod::l1;
  if (name == "l2") return RegMethod::l2;
  if (name == "bn") return RegMethod::bn;
  return std::nullopt;
}

void RegConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("RegConfig: lambda must be a finite nonnegative number");
  }
  if (slices == 0) throw std::invalid_argument("RegConfig: slices must be >= 1");
}

// Written as |z| + 2 (phi(z) - |z| Q(|z|)) so the tail correction keeps its
// relative accuracy and the result never rounds below |z|.
double per_point_loss(double z) {
  const double a = std::fabs(z);
  const double upper = 0.5 * erfc(a / kSqrt2);
  return a + 2.0 * (std_normal_pdf(a) - a * upper);
}

double per_point_grad(double z) { return erf(z / kSqrt2); }

double per_loss(const Matrix& batch, const SliceSet& slices) {
  const Matrix proj = project_all(batch, slices);
  double acc = 0.0;
  for (double z : proj.flat()) acc += per_point_loss(z);
  return acc / static_cast<double>(proj.size());
}

namespace {

// row i = scale * sum_k erf(<h_i, theta_k> / sqrt 2) theta_k
Matrix erf_weighted_directions(const Matrix& batch, const SliceSet& slices, double scale) {
  Matrix weights = project_all(batch, slices);
  for (double& z : weights.flat()) z = per_point_grad(z) * scale;
  return matmul(weights, slices.directions());
}

}  // namespace

Matrix per_grad(const Matrix& batch, const SliceSet& slices) {
  const double scale = 1.0 / (static_cast<double>(batch.rows()) * slices.count());
  return erf_weighted_directions(batch, slices, scale);
}

Matrix apply_per_backward(const Matrix& upstream, const Matrix& batch, double lambda,
                          const SliceSet& slices) {
  require_same_shape(upstream, batch, "apply_per_backward");
  if (lambda == 0.0) return upstream;
  const Matrix g = erf_weighted_directions(batch, slices, 1.0 / static_cast<double>(slices.count()));
  Matrix out = upstream;
  auto o = out.flat();
  const auto gf = g.flat();
  for (std::size_t n = 0; n < o.size(); ++n) o[n] += lambda * gf[n];
  return out;
}

Matrix apply_per_backward(const Matrix& upstream, const Matrix& batch, const RegConfig& cfg,
                          RngStream& rng) {
  if (cfg.method != RegMethod::per) {
    throw std::domain_error("apply_per_backward: configuration method is not per");
  }
  cfg.validate();
  require_same_shape(upstream, batch, "apply_per_backward");
  if (cfg.lambda == 0.0) return upstream;
  const SliceSet slices = SliceSet::sample(rng, cfg.slices, batch.cols());
  return apply_per_backward(upstream, batch, cfg.lambda, slices);
}

}  // namespace perreg
