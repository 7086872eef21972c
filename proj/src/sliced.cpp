#include "perreg/sliced.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "perreg/ot1d.hpp"

namespace perreg {

SliceSet::SliceSet(Matrix directions) : directions_(std::move(directions)) {
  if (directions_.rows() == 0 || directions_.cols() == 0) {
    throw std::domain_error("SliceSet: need at least one direction of dimension >= 1");
  }
  for (std::size_t k = 0; k < directions_.rows(); ++k) {
    const auto row = directions_.row(k);
    const double norm = std::sqrt(dot(row, row));
    if (std::fabs(norm - 1.0) > 1e-12) {
      throw std::domain_error("SliceSet: direction " + std::to_string(k) + " is not unit length");
    }
  }
}

SliceSet SliceSet::sample(RngStream& rng, std::size_t s, std::size_t d) {
  if (s == 0) throw std::domain_error("SliceSet::sample: slice count must be >= 1");
  Matrix dirs(s, d);
  for (std::size_t k = 0; k < s; ++k) {
    const auto theta = sample_unit_sphere(rng, d);
    std::copy(theta.begin(), theta.end(), dirs.row(k).begin());
  }
  return SliceSet(std::move(dirs));
}

std::vector<double> project(const Matrix& batch, std::span<const double> theta) {
  if (theta.size() != batch.cols()) {
    throw std::domain_error("project: direction has dimension " + std::to_string(theta.size()) +
                            ", batch has " + std::to_string(batch.cols()));
  }
  std::vector<double> out(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) out[i] = dot(batch.row(i), theta);
  return out;
}

Matrix project_all(const Matrix& batch, const SliceSet& slices) {
  if (slices.dim() != batch.cols()) {
    throw std::domain_error("project_all: slice dimension " + std::to_string(slices.dim()) +
                            " does not match batch dimension " + std::to_string(batch.cols()));
  }
  return matmul_transposed(batch, slices.directions());
}

double sw1_to_gaussian(const Matrix& batch, const SliceSet& slices) {
  double acc = 0.0;
  for (std::size_t k = 0; k < slices.count(); ++k) {
    acc += w1_empirical_gaussian(project(batch, slices.direction(k)));
  }
  return acc / static_cast<double>(slices.count());
}

double sw1_empirical(const Matrix& batch, const Matrix& reference, const SliceSet& slices) {
  require_same_shape(batch, reference, "sw1_empirical");
  double acc = 0.0;
  for (std::size_t k = 0; k < slices.count(); ++k) {
    const auto theta = slices.direction(k);
    acc += w1_empirical_empirical(project(batch, theta), project(reference, theta));
  }
  return acc / static_cast<double>(slices.count());
}

}  // namespace perreg
