#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "chainmean/scalar_est.hpp"

using namespace chainmean;

namespace {

// Straight sort-based oracle for the median of block means.
double oracle_mom(const std::vector<double>& v, std::size_t k) {
  std::vector<double> means;
  const std::size_t n = v.size();
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = n / k + (b < n % k ? 1 : 0);
    means.push_back(std::accumulate(v.begin() + pos, v.begin() + pos + len, 0.0) / len);
    pos += len;
  }
  std::sort(means.begin(), means.end());
  return means[k / 2];
}

}  // namespace

TEST_SUITE("scalar_est") {

TEST_CASE("block count follows the formula, odd and capped") {
  CHECK(block_count(100, Confidence::from_delta(std::exp(-1.0)), 0.0) == 9);
  CHECK(block_count(5, Confidence::from_delta(1e-9), 0.0) == 5);
  CHECK(block_count(100, Confidence::from_delta(0.5), 0.1) == 99);
  // ceil(8 ln 100) = 37 is already odd.
  CHECK(block_count(2000, Confidence::from_delta(0.01), 0.0) == 37);
  CHECK(block_count(1, Confidence::from_delta(0.5), 0.0) == 1);
  for (std::size_t n = 1; n < 300; ++n) {
    const std::size_t k = block_count(n, Confidence::from_delta(0.01), 0.02);
    CHECK(k % 2 == 1);
    CHECK(k >= 1);
    CHECK(k <= n);
  }
}

TEST_CASE("block count rejects eta of one") {
  CHECK_THROWS_AS(block_count(10, Confidence::from_delta(0.1), 1.0), Error);
}

TEST_CASE("median of means examples") {
  const std::vector<double> five(6, 5.0);
  CHECK(median_of_means(five, 0.3) == 5.0);

  const std::vector<double> nine = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(median_of_block_means(nine, 3) == doctest::Approx(5.0));

  const std::vector<double> spiked = {0, 0, 0, 0, 0, 0, 0, 0, 1e6};
  CHECK(median_of_block_means(spiked, 3) == 0.0);
}

TEST_CASE("uneven blocks put the extra elements first") {
  // N = 10, k = 3: blocks of 4, 3, 3.
  const std::vector<double> v = {1, 1, 1, 1, 10, 10, 10, 2, 2, 2};
  CHECK(median_of_block_means(v, 3) == doctest::Approx(2.0));
  CHECK(median_of_block_means(v, 3) == doctest::Approx(oracle_mom(v, 3)));
}

TEST_CASE("median of block means agrees with a sort oracle") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    for (std::size_t k = 1; k <= n; k += 2) {
      CHECK(median_of_block_means(v, k) == oracle_mom(v, k));
    }
  }
}

TEST_CASE("median of means error paths") {
  const std::vector<double> empty;
  CHECK_THROWS_AS(median_of_means(empty, 0.1), Error);
  try {
    median_of_means(empty, 0.1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySample);
  }
  const std::vector<double> v = {1, 2, 3};
  for (const double bad : {0.0, -0.1, 0.51, 1.0}) {
    try {
      median_of_means(v, bad);
      FAIL("accepted delta " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadConfidence);
    }
  }
  CHECK_THROWS_AS(median_of_block_means(v, 2), Error);
  CHECK_THROWS_AS(median_of_block_means(v, 5), Error);
}

TEST_CASE("corrupted median of means") {
  std::vector<double> v(100, 0.0);
  std::fill(v.begin() + 90, v.end(), 1e9);
  CHECK(mom_corrupted(v, 0.1, 0.1) == 0.0);

  const std::vector<double> c(37, -2.5);
  for (const double eta : {0.0, 0.1, 0.3, 0.49}) CHECK(mom_corrupted(c, 0.05, eta) == -2.5);

  try {
    mom_corrupted(c, 0.05, 0.5);
    FAIL("eta = 1/2 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EtaTooLarge);
  }
}

TEST_CASE("corrupted median of means at eta zero is the plain estimator") {
  std::mt19937_64 rng(11);
  std::exponential_distribution<double> e;
  std::vector<double> v(777);
  for (auto& x : v) x = e(rng);
  for (const double delta : {0.5, 0.1, 1e-3}) {
    CHECK(mom_corrupted(v, delta, 0.0) == median_of_means(v, delta));
  }
}

TEST_CASE("trimmed mean examples") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(trimmed_mean_m(v, 10) == doctest::Approx(50.5));

  const std::vector<double> c(50, 3.25);
  CHECK(trimmed_mean(c, 0.2, 0.05) == doctest::Approx(3.25));

  std::vector<double> w(100, 0.0);
  w[98] = -1e6;
  w[99] = 1e6;
  CHECK(trimmed_mean_m(w, 1) == 0.0);
  // m = ceil(0.02 * 100 + 8 ln 2) = 8.
  CHECK(trimmed_mean(w, 0.5, 0.02) == 0.0);
}

TEST_CASE("trimmed mean rejects trimming everything") {
  const std::vector<double> v(10, 1.0);
  try {
    trimmed_mean_m(v, 5);
    FAIL("emptied the list");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SampleTooSmall);
  }
  // m = ceil(8 ln 100) = 37 > 10 / 2.
  CHECK_THROWS_AS(trimmed_mean(v, 0.01, 0.0), Error);
}

TEST_CASE("estimator spec dispatches and guards the oracle") {
  const std::vector<double> v = {1, 2, 3, 4, 100};
  const auto mom = ScalarEstimatorSpec::median_of_means(0.5);
  CHECK(mom.kind() == EstimatorKind::MedianOfMeans);
  CHECK(mom.estimate(v, Confidence::from_delta(0.5)) == median_of_means(v, 0.5));

  const auto oracle = ScalarEstimatorSpec::exact_mean_oracle([](FunctionId f) { return 2.0 * f; });
  CHECK_FALSE(oracle.is_robust());
  CHECK(oracle.true_mean(3) == 6.0);
  CHECK_THROWS_AS(oracle.estimate(v, Confidence::from_delta(0.5)), Error);
  CHECK_THROWS_AS(ScalarEstimatorSpec::exact_mean_oracle(nullptr), Error);
  CHECK_THROWS_AS(ScalarEstimatorSpec::median_of_means(0.0), Error);
  CHECK_THROWS_AS(ScalarEstimatorSpec::trimmed_mean(0.1, 1.5), Error);
}

TEST_CASE("confidence stores log inverse without underflow") {
  const auto c = Confidence::from_log_inverse(std::ldexp(1.0, 12));
  CHECK(c.delta() == 0.0);
  CHECK(c.log_inverse() == 4096.0);
  CHECK_NOTHROW(Confidence::from_delta(0.5));
  CHECK_THROWS_AS(Confidence::from_log_inverse(0.1), Error);
}

}
