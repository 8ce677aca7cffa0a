#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fracbayes/rng.hpp"
#include "fracbayes/special_functions.hpp"

using namespace fracbayes;

TEST_CASE("same key gives bit-identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forked streams differ from each other") {
  Rng a(42);
  Rng child = a.fork(0);
  Rng child2 = a.fork(1);
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (child.next_u64() == child2.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("uniform moments") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum_sq += u * u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::fabs(sum_sq / n - 1.0 / 3.0) < 5e-3);
}

TEST_CASE("normal moments") {
  Rng rng(11);
  const int n = 400000;
  double sum = 0.0, sum_sq = 0.0, sum_4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
    sum_4 += z * z * z * z;
  }
  CHECK(std::fabs(sum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(sum_sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(sum_4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("gamma sampler matches the gamma CDF at quartiles") {
  for (double shape : {0.5, 1.0, 2.5, 7.0}) {
    Rng rng(13 + static_cast<std::uint64_t>(shape * 10));
    const int n = 100000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = rng.gamma(shape);
    for (double q : {0.25, 0.5, 0.75}) {
      double lo = 0.0, hi = 200.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gamma_p(shape, mid) < q ? lo : hi) = mid;
      }
      const double quantile = 0.5 * (lo + hi);
      int count = 0;
      for (double x : draws)
        if (x <= quantile) ++count;
      const double freq = static_cast<double>(count) / n;
      CHECK(std::fabs(freq - q) < 4.0 * std::sqrt(q * (1 - q) / n));
    }
  }
}

TEST_CASE("inverse gamma mean") {
  Rng rng(17);
  const int n = 200000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += rng.inv_gamma(3.0, 2.0);
  mean /= n;
  // IG(3,2) has mean b/(a-1) = 1
  CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
}
