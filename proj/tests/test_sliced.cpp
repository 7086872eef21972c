#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "perreg/ot1d.hpp"
#include "perreg/regularizer.hpp"
#include "perreg/sliced.hpp"

using namespace perreg;

namespace {

Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double scale = 1.0, double shift = 0.0) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = shift + scale * rng.gaussian();
  return m;
}

// Skewed, non-Gaussian cloud.
Matrix skewed_matrix(RngStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double g = rng.gaussian();
      m(i, j) = 0.5 * g * g + 0.3 * static_cast<double>(j);
    }
  }
  return m;
}

// Random orthogonal matrix, Gram-Schmidt on std::mt19937 normals.
Matrix random_orthogonal(std::size_t d, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix q(d, d);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < d; ++c) q(r, c) = nd(gen);
    for (std::size_t p = 0; p < r; ++p) {
      double proj = 0.0;
      for (std::size_t c = 0; c < d; ++c) proj += q(r, c) * q(p, c);
      for (std::size_t c = 0; c < d; ++c) q(r, c) -= proj * q(p, c);
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) norm += q(r, c) * q(r, c);
    for (std::size_t c = 0; c < d; ++c) q(r, c) /= std::sqrt(norm);
  }
  return q;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("slice sets validate their rows") {
  CHECK_NOTHROW(SliceSet(Matrix(1, 2, std::vector<double>{0.6, 0.8})));
  CHECK_THROWS_AS(SliceSet(Matrix(1, 2, std::vector<double>{0.6, 0.81})), std::domain_error);
  CHECK_THROWS_AS(SliceSet(Matrix(0, 3)), std::domain_error);

  RngStream rng(1);
  const SliceSet s = SliceSet::sample(rng, 300, 7);
  CHECK(s.count() == 300);
  CHECK(s.dim() == 7);
  for (std::size_t k = 0; k < s.count(); ++k) {
    REQUIRE(std::fabs(std::sqrt(dot(s.direction(k), s.direction(k))) - 1.0) <= 1e-12);
  }
}

TEST_CASE("projection examples") {
  const Matrix h(1, 2, std::vector<double>{3.0, 4.0});
  const std::vector<double> theta{0.6, 0.8};
  CHECK(project(h, theta)[0] == doctest::Approx(5.0).epsilon(1e-15));

  RngStream rng(2);
  const Matrix m = gaussian_matrix(rng, 9, 4);
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> e(4, 0.0);
    e[j] = 1.0;
    CHECK(project(m, e) == m.column(j));
  }
  const auto zeros = project(Matrix(5, 3), std::vector<double>{0.0, 1.0, 0.0});
  CHECK(zeros == std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(project(m, std::vector<double>{1.0, 0.0}), std::domain_error);

  const SliceSet slices = SliceSet::sample(rng, 6, 4);
  const Matrix all = project_all(m, slices);
  for (std::size_t k = 0; k < 6; ++k) {
    const auto p = project(m, slices.direction(k));
    for (std::size_t i = 0; i < m.rows(); ++i) REQUIRE(all(i, k) == p[i]);
  }
}

TEST_CASE("sw1 to the gaussian: definition checks") {
  RngStream rng(3);
  const SliceSet slices = SliceSet::sample(rng, 40, 5);
  CHECK(std::fabs(sw1_to_gaussian(Matrix(12, 5), slices) - std::sqrt(2.0 / std::numbers::pi)) <= 1e-12);

  const Matrix h = gaussian_matrix(rng, 1, 5, 2.0);
  const SliceSet one = SliceSet::sample(rng, 1, 5);
  CHECK(sw1_to_gaussian(h, one) == w1_empirical_gaussian(project(h, one.direction(0))));
  CHECK_THROWS_AS(sw1_to_gaussian(Matrix(3, 4), slices), std::domain_error);
}

TEST_CASE("sw1 to the gaussian is small for gaussian data") {
  RngStream rng(4);
  const Matrix h = gaussian_matrix(rng, 4096, 8);
  const SliceSet slices = SliceSet::sample(rng, 256, 8);
  CHECK(sw1_to_gaussian(h, slices) <= 0.05);
}

TEST_CASE("sw1 to the gaussian never exceeds the per loss on the same slices") {
  RngStream rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t b = 1 + rng.below(40);
    const std::size_t d = 1 + rng.below(10);
    const Matrix h = gaussian_matrix(rng, b, d, 0.1 + 3.0 * rng.uniform(), 2.0 * rng.uniform() - 1.0);
    const SliceSet slices = SliceSet::sample(rng, 1 + rng.below(64), d);
    REQUIRE(sw1_to_gaussian(h, slices) <= per_loss(h, slices) + 1e-9);
  }
}

TEST_CASE("sw1 between empirical measures") {
  RngStream rng(6);
  const Matrix a = skewed_matrix(rng, 50, 6);
  const Matrix b = gaussian_matrix(rng, 50, 6);
  const SliceSet slices = SliceSet::sample(rng, 128, 6);
  CHECK(sw1_empirical(a, a, slices) == 0.0);
  CHECK(sw1_empirical(a, b, slices) == sw1_empirical(b, a, slices));
  CHECK_THROWS_AS(sw1_empirical(a, gaussian_matrix(rng, 49, 6), slices), std::domain_error);
  CHECK_THROWS_AS(sw1_empirical(a, gaussian_matrix(rng, 50, 5), slices), std::domain_error);
}

TEST_CASE("sw1 between a batch and its translate") {
  const std::size_t d = 5;
  RngStream rng(7);
  const Matrix a = skewed_matrix(rng, 64, d);
  const std::vector<double> c{1.0, -2.0, 0.5, 0.0, 3.0};
  Matrix shifted = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) shifted(i, j) += c[j];
  }
  const SliceSet slices = SliceSet::sample(rng, 4096, d);
  const double estimate = sw1_empirical(a, shifted, slices);

  // E|theta_1| for uniform theta on S^{d-1}, times ||c||.
  const double norm_c = std::sqrt(dot(c, c));
  const double closed = norm_c * std::exp(std::lgamma(d / 2.0) - std::lgamma((d + 1) / 2.0)) / std::sqrt(std::numbers::pi);

  // Brute force with an independent generator.
  std::mt19937_64 gen(77);
  std::normal_distribution<double> nd;
  const int n = 1000000;
  double acc = 0.0;
  std::vector<double> g(d);
  for (int k = 0; k < n; ++k) {
    double sq = 0.0;
    for (auto& x : g) {
      x = nd(gen);
      sq += x * x;
    }
    acc += std::fabs(dot(g, c)) / std::sqrt(sq);
  }
  const double brute = acc / n;
  CHECK(std::fabs(brute - closed) / closed <= 0.005);
  CHECK(std::fabs(estimate - closed) / closed <= 0.05);
}

TEST_CASE("sw1 between empirical measures in one dimension") {
  RngStream rng(8);
  const Matrix a = gaussian_matrix(rng, 30, 1);
  const Matrix b = skewed_matrix(rng, 30, 1);
  const SliceSet plus(Matrix(1, 1, 1.0));
  const SliceSet minus(Matrix(1, 1, -1.0));
  CHECK(sw1_empirical(a, b, plus) == w1_empirical_empirical(a.column(0), b.column(0)));
  auto na = a.column(0);
  auto nb = b.column(0);
  for (auto& v : na) v = -v;
  for (auto& v : nb) v = -v;
  CHECK(sw1_empirical(a, b, minus) == w1_empirical_empirical(na, nb));

  RngStream srng(9);
  const SliceSet drawn = SliceSet::sample(srng, 10, 1);
  for (std::size_t k = 0; k < drawn.count(); ++k) REQUIRE(std::fabs(drawn.direction(k)[0]) == 1.0);
}

TEST_CASE("Monte Carlo error shrinks like one over root s") {
  RngStream rng(10);
  const Matrix h = skewed_matrix(rng, 256, 8);
  std::vector<double> coarse;
  std::vector<double> fine;
  for (int t = 0; t < 50; ++t) {
    RngStream a = rng.split(1, t);
    RngStream b = rng.split(2, t);
    coarse.push_back(sw1_to_gaussian(h, SliceSet::sample(a, 256, 8)));
    fine.push_back(sw1_to_gaussian(h, SliceSet::sample(b, 2304, 8)));
  }
  const double ratio = stddev_of(coarse) / stddev_of(fine);
  CAPTURE(ratio);
  CHECK(ratio >= 2.0);
  CHECK(ratio <= 4.5);
}

TEST_CASE("sw1 to the gaussian is rotation invariant in expectation") {
  const std::size_t d = 6;
  RngStream rng(11);
  const Matrix h = skewed_matrix(rng, 128, d);
  const Matrix q = random_orthogonal(d, 12);
  const Matrix qh = matmul_transposed(h, q);  // row i = Q h_i

  std::vector<double> plain;
  std::vector<double> rotated;
  for (int t = 0; t < 50; ++t) {
    RngStream a = rng.split(3, t);
    RngStream b = rng.split(4, t);
    plain.push_back(sw1_to_gaussian(h, SliceSet::sample(a, 256, d)));
    rotated.push_back(sw1_to_gaussian(qh, SliceSet::sample(b, 256, d)));
  }
  const double se = std::sqrt((std::pow(stddev_of(plain), 2) + std::pow(stddev_of(rotated), 2)) / 50.0);
  CHECK(std::fabs(mean_of(plain) - mean_of(rotated)) <= 3.0 * se);
}
