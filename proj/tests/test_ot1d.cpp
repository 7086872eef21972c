#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "perreg/ot1d.hpp"
#include "perreg/regularizer.hpp"
#include "perreg/special_fns.hpp"

using namespace perreg;

namespace {

std::vector<double> random_sample(RngStream& rng, std::size_t b) {
  const double scale = 0.2 + 2.8 * rng.uniform();
  const double shift = 4.0 * rng.uniform() - 2.0;
  std::vector<double> v(b);
  for (auto& x : v) x = shift + scale * rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("empirical-empirical W1 basics") {
  const std::vector<double> a{3.0, -1.0, 2.5, 0.0};
  CHECK(w1_empirical_empirical(a, a) == 0.0);
  CHECK(w1_empirical_empirical(std::vector<double>{0, 2}, std::vector<double>{1, 3}) == 1.0);
  CHECK(w1_empirical_empirical(std::vector<double>{0}, std::vector<double>{-2.75}) == 2.75);
  // Order of the inputs does not matter, only the order statistics.
  CHECK(w1_empirical_empirical(std::vector<double>{2, 0}, std::vector<double>{1, 3}) == 1.0);

  const std::vector<double> empty;
  CHECK_THROWS_AS(w1_empirical_empirical(empty, empty), std::domain_error);
  CHECK_THROWS_AS(w1_empirical_empirical(std::vector<double>{1, 2}, std::vector<double>{1}), std::domain_error);
  CHECK_THROWS_AS(w1_empirical_empirical(std::vector<double>{std::nan("")}, std::vector<double>{1}),
                  std::domain_error);
}

TEST_CASE("empirical-empirical W1 is a translation-covariant metric") {
  RngStream rng(101);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t b = 1 + rng.below(40);
    const auto x = random_sample(rng, b);
    const auto y = random_sample(rng, b);
    const auto z = random_sample(rng, b);
    const double xy = w1_empirical_empirical(x, y);
    REQUIRE(xy >= 0.0);
    REQUIRE(xy == w1_empirical_empirical(y, x));
    REQUIRE(xy <= w1_empirical_empirical(x, z) + w1_empirical_empirical(z, y) + 1e-12);

    const double c = 6.0 * rng.uniform() - 3.0;
    auto shifted = x;
    for (auto& v : shifted) v += c;
    REQUIRE(std::fabs(w1_empirical_empirical(x, shifted) - std::fabs(c)) <= 1e-12);
  }
}

TEST_CASE("empirical-gaussian W1 of point masses") {
  CHECK(std::fabs(w1_empirical_gaussian(std::vector<double>{0.0}) - 0.797884560802865355879892119869) <= 1e-12);
  // mpmath quadrature of E|Z - 1|.
  CHECK(std::fabs(w1_empirical_gaussian(std::vector<double>{1.0}) - 1.16663094117537259676612547714) <= 1e-10);
  CHECK(std::fabs(oracle::expected_abs_deviation(1.0) - 1.16663094117537259676612547714) <= 1e-10);

  for (int i = 0; i < 100; ++i) {
    const double z = -5.0 + 10.0 * i / 99.0;
    REQUIRE(std::fabs(w1_empirical_gaussian(std::vector<double>{z}) - per_point_loss(z)) <= 1e-10);
  }
  CHECK_THROWS_AS(w1_empirical_gaussian(std::vector<double>{}), std::domain_error);
}

TEST_CASE("empirical-gaussian W1 agrees with quadrature of the CDF gap") {
  RngStream rng(202);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t b = 1 + rng.below(64);
    auto x = random_sample(rng, b);
    if (t % 10 == 0 && b > 2) x[1] = x[0];  // ties
    const double closed = w1_empirical_gaussian(x);
    const double quad = oracle::cdf_gap_integral(x);
    worst = std::max(worst, std::fabs(closed - quad));
  }
  CHECK(worst <= 1e-9);

  // Hand-picked layouts: all mass on one side, symmetric pair, far tail.
  for (const std::vector<double>& x : {std::vector<double>{-3, -2, -1}, std::vector<double>{-1, 1},
                                       std::vector<double>{8.5, 9.0}, std::vector<double>{0, 0, 0, 0.5}}) {
    CHECK(std::fabs(w1_empirical_gaussian(x) - oracle::cdf_gap_integral(x)) <= 1e-9);
  }
}

TEST_CASE("empirical-gaussian W1 obeys the Minkowski bound") {
  RngStream rng(303);
  for (int t = 0; t < 200; ++t) {
    const std::size_t b = 1 + rng.below(64);
    const auto x = random_sample(rng, b);
    double bound = 0.0;
    for (double v : x) bound += w1_empirical_gaussian(std::vector<double>{v});
    bound /= static_cast<double>(b);
    REQUIRE(w1_empirical_gaussian(x) <= bound + 1e-9);
  }
}

TEST_CASE("empirical-gaussian W1 vanishes for large gaussian samples") {
  RngStream rng(404);
  const auto x = sample_standard_gaussian(rng, 100000);
  CHECK(w1_empirical_gaussian(x) <= 0.02);
}
