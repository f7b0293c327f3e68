#include <doctest.h>

#include <cmath>
#include <random>

#include "mif/error.hpp"
#include "mif/lumped_entropy.hpp"
#include "oracles.hpp"

using namespace mif;

TEST_CASE("coefficient of variation") {
  const std::vector<double> w = {3.0, 5.0};
  CHECK(coefficient_of_variation(w) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<double> flat = {3.7, 3.7, 3.7};
  CHECK(std::abs(coefficient_of_variation(flat)) < 1e-12);
  const std::vector<double> zero = {-1.0, 1.0};
  CHECK_THROWS_WITH_AS(coefficient_of_variation(zero), "zero-mean window", DataError);
}

TEST_CASE("sliding window keeps the most recent samples in order") {
  SlidingWindowBuffer buf(3, 2);
  const double rows[5][2] = {{1, 10}, {2, 20}, {3, 30}, {4, 40}, {5, 50}};
  for (int k = 0; k < 2; ++k) buf.push(rows[k]);
  CHECK_FALSE(buf.warm());
  CHECK_THROWS_AS(sliding_cv(buf, 0), DataError);
  for (int k = 2; k < 5; ++k) buf.push(rows[k]);
  CHECK(buf.warm());
  CHECK(buf.window(0) == std::vector<double>{3, 4, 5});
  CHECK(buf.window(1) == std::vector<double>{30, 40, 50});
  const double wrong[3] = {1, 2, 3};
  CHECK_THROWS_AS(buf.push(wrong), DataError);
}

TEST_CASE("absolute z-scores") {
  const std::vector<double> cv = {1, 1, 1, 3};
  const ZScores z = z_scores(cv);
  CHECK_FALSE(z.degenerate);
  CHECK(z.values[0] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(z.values[3] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  const std::vector<double> flat = {0.2, 0.2, 0.2};
  const ZScores d = z_scores(flat);
  CHECK(d.degenerate);
  for (double v : d.values) CHECK(v == 0.0);
}

TEST_CASE("dissimilarity entropy identities") {
  const std::vector<double> two = {0, 0, 2, 2};
  CHECK(dissimilarity_entropy(two) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> same = {0.7, 0.7, 0.7};
  CHECK(dissimilarity_entropy(same) == 0.0);
  const std::vector<double> lone = {0, 0, 0, 3};
  CHECK(dissimilarity_entropy(lone) == doctest::Approx(oracle::dissimilarity(lone)).epsilon(1e-12));
  CHECK(dissimilarity_entropy(lone) > 1.0);
}

TEST_CASE("dissimilarity entropy matches the moment oracle on random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(2 + trial % 9);
    for (double& v : z) v = u(rng);
    CHECK(dissimilarity_entropy(z) == doctest::Approx(oracle::dissimilarity(z)).epsilon(1e-10));
  }
}

TEST_CASE("tracker warms up after W samples and is scale-free") {
  const std::size_t w = 5;
  LumpedEntropyTracker a(w, 3);
  LumpedEntropyTracker b(w, 3);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.001);
  for (std::size_t k = 0; k < 20; ++k) {
    std::vector<double> v = {3.7 + n(rng), 3.7 + n(rng), 3.7 + n(rng)};
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= 2.5;
    const auto ra = a.push(v);
    const auto rb = b.push(scaled);
    CHECK(ra.has_value() == (k + 1 >= w));
    if (ra) CHECK(ra->h_d == doctest::Approx(rb->h_d).epsilon(1e-9));
  }
}

TEST_CASE("identical voltage signals are degenerate with zero entropy") {
  LumpedEntropyTracker t(4, 6);
  std::optional<LumpedEntropyRecord> rec;
  for (int k = 0; k < 6; ++k) {
    const std::vector<double> v(6, 3.6 + 0.01 * k);
    rec = t.push(v);
  }
  REQUIRE(rec);
  CHECK(rec->degenerate);
  CHECK(rec->h_d == 0.0);
}
