#include <cmath>
#include <vector>

#include "doctest.h"
#include "survpp/rng.hpp"
#include "survpp/slice.hpp"

using survpp::Rng;

TEST_CASE("streams are reproducible and key-separated") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // child streams do not depend on parent consumption
  Rng parent1(7), parent2(7);
  parent2.uniform();
  parent2.normal();
  Rng c1 = parent1.stream(3, 1);
  Rng c2 = parent2.stream(3, 1);
  for (int i = 0; i < 20; ++i) CHECK(c1.next_u64() == c2.next_u64());

  // different keys give different streams
  Rng d1 = parent1.stream(3, 1);
  Rng d2 = parent1.stream(4, 1);
  int equal = 0;
  for (int i = 0; i < 20; ++i) equal += d1.next_u64() == d2.next_u64();
  CHECK(equal == 0);
}

TEST_CASE("uniform moments") {
  Rng rng(1);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sq / n - 0.25 == doctest::Approx(1.0 / 12).epsilon(0.03));
}

TEST_CASE("normal and gamma moments") {
  Rng rng(2);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1.0).scale(0.01));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));

  double gsum = 0.0, gsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(3.0, 2.0);
    gsum += g;
    gsq += g * g;
  }
  const double mean = gsum / n;
  CHECK(mean == doctest::Approx(1.5).epsilon(0.02));
  CHECK(gsq / n - mean * mean == doctest::Approx(0.75).epsilon(0.05));

  // small-shape boost path
  double ssum = 0.0;
  for (int i = 0; i < n; ++i) ssum += rng.gamma(0.3, 1.0);
  CHECK(ssum / n == doctest::Approx(0.3).epsilon(0.03));
}

TEST_CASE("beta moments") {
  Rng rng(3);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.beta(2.0, 5.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(mean == doctest::Approx(2.0 / 7.0).epsilon(0.02));
  CHECK(sq / n - mean * mean ==
        doctest::Approx(2.0 * 5.0 / (49.0 * 8.0)).epsilon(0.05));
}

TEST_CASE("slice sampler leaves a standard normal invariant") {
  Rng rng(11);
  survpp::SliceConfig cfg;
  auto logf = [](double x) { return -0.5 * x * x; };
  double x = 0.0;
  const int n = 50000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    x = survpp::slice_sample_1d(logf, x, cfg, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.05);
}

TEST_CASE("slice sampler on a log-scale Gamma(3,2) target") {
  // sample z = log(x) where x ~ Gamma(3, 2); E[x] = 1.5
  Rng rng(12);
  survpp::SliceConfig cfg;
  auto logf = [](double z) { return 3.0 * z - 2.0 * std::exp(z); };
  double z = 0.0;
  const int n = 50000;
  double sum = 0.0;
  std::vector<double> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) {
    z = survpp::slice_sample_1d(logf, z, cfg, rng);
    xs.push_back(std::exp(z));
    sum += xs.back();
  }
  const double mean = sum / n;
  // MC-SE with autocorrelation is well under 0.02 at n = 50k
  CHECK(mean == doctest::Approx(1.5).epsilon(0.03));
}

TEST_CASE("slice sampler terminates with a huge width") {
  Rng rng(13);
  survpp::SliceConfig cfg;
  cfg.width = 1e6;
  auto logf = [](double x) { return -0.5 * x * x; };
  double x = 0.0;
  for (int i = 0; i < 100; ++i) x = survpp::slice_sample_1d(logf, x, cfg, rng);
  CHECK(std::isfinite(x));
}

TEST_CASE("slice sampler rejects a non-finite start") {
  Rng rng(14);
  survpp::SliceConfig cfg;
  auto logf = [](double x) {
    return x > 0 ? std::log(x) - x : -std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(survpp::slice_sample_1d(logf, -1.0, cfg, rng),
                  survpp::Error);
}
