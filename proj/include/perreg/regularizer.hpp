#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "perreg/matrix.hpp"
#include "perreg/sliced.hpp"
#include "perreg/special_fns.hpp"

namespace perreg {

enum class RegMethod { none, per, l1, l2, bn };

// Where an activation regularizer attaches inside a hidden layer.
enum class RegTarget { post_activation, pre_activation };

std::string_view to_string(RegMethod method);
std::optional<RegMethod> parse_reg_method(std::string_view name);

struct RegConfig {
  RegMethod method = RegMethod::none;
  double lambda = 0.0;
  std::size_t slices = kDefaultSlices;
  // Root stream for slice draws. Training splits it per (layer, iteration).
  RngStream seed{0};
  RegTarget target = RegTarget::post_activation;

  // Throws std::invalid_argument when lambda < 0 or slices == 0.
  void validate() const;
};

// z erf(z / sqrt 2) + sqrt(2/pi) exp(-z^2 / 2) = E|Z - z| for Z ~ N(0, 1).
double per_point_loss(double z);
// d/dz per_point_loss(z) = erf(z / sqrt 2).
double per_point_grad(double z);

// (1/(b s)) sum_{i,k} per_point_loss(<h_i, theta_k>). Upper bound on the
// sliced W1 distance to N(0, I) evaluated on the same slices.
double per_loss(const Matrix& batch, const SliceSet& slices);

// Exact gradient of per_loss with respect to the batch:
// row i = (1/(b s)) sum_k erf(<h_i, theta_k> / sqrt 2) theta_k.
Matrix per_grad(const Matrix& batch, const SliceSet& slices);

// Backward-pass hook: upstream + lambda * G with
// G row i = (1/s) sum_k erf(<h_i, theta_k> / sqrt 2) theta_k.
// G carries no 1/b factor, so it equals b * per_grad on the same slices.
Matrix apply_per_backward(const Matrix& upstream, const Matrix& batch, double lambda,
                          const SliceSet& slices);

// Same, drawing cfg.slices fresh directions from `rng`.
// Throws std::domain_error unless cfg.method is RegMethod::per.
Matrix apply_per_backward(const Matrix& upstream, const Matrix& batch, const RegConfig& cfg,
                          RngStream& rng);

}  // namespace perreg
