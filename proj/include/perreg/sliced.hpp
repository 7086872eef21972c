#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "perreg/matrix.hpp"
#include "perreg/special_fns.hpp"

namespace perreg {

// Default Monte Carlo slice count.
inline constexpr std::size_t kDefaultSlices = 256;

// s directions on the unit sphere in R^d, one per row.
class SliceSet {
 public:
  // Takes ownership of `directions`; every row must have unit norm within
  // 1e-12 and there must be at least one row. Throws std::domain_error.
  explicit SliceSet(Matrix directions);

  // Draws s i.i.d. uniform directions in R^d from `rng`.
  static SliceSet sample(RngStream& rng, std::size_t s, std::size_t d);

  std::size_t count() const { return directions_.rows(); }
  std::size_t dim() const { return directions_.cols(); }
  std::span<const double> direction(std::size_t k) const { return directions_.row(k); }
  const Matrix& directions() const { return directions_; }

 private:
  Matrix directions_;
};

// Activations of one layer: row i is h_i.
struct ActivationBatch {
  Matrix values;
  int layer_index = 0;

  std::size_t batch_size() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

// {<h_i, theta>} for every row. Throws std::domain_error on dimension mismatch.
std::vector<double> project(const Matrix& batch, std::span<const double> theta);

// All projections at once: out(i, k) = <h_i, theta_k>.
Matrix project_all(const Matrix& batch, const SliceSet& slices);

// Monte Carlo SW1 between the batch's empirical measure and N(0, I), using
// the exact 1-D distance on every slice.
double sw1_to_gaussian(const Matrix& batch, const SliceSet& slices);

// Monte Carlo SW1 between two equal-size empirical measures.
double sw1_empirical(const Matrix& batch, const Matrix& reference, const SliceSet& slices);

}  // namespace perreg
