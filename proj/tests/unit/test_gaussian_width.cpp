#include <doctest.h>

#include <cmath>
#include <random>

#include "chainmean/gaussian_width.hpp"

using namespace chainmean;

TEST_SUITE("gaussian_width") {

TEST_CASE("signed basis vector gives E|g|") {
  Matrix t(2, 1);
  t << 1, -1;
  const auto cls = FunctionClass::linear(t);
  const auto w = gaussian_sup(cls, Matrix::Identity(1, 1), 100000, 17);
  CHECK(w.draws == 100000);
  CHECK(w.seed == 17);
  CHECK(std::abs(w.mean - std::sqrt(2.0 / M_PI)) <= 3.0 * w.std_error);
}

TEST_CASE("singleton direction is centred") {
  Matrix t(1, 3);
  t << 0.6, 0.0, 0.8;
  const auto w = gaussian_sup(FunctionClass::linear(t), Matrix::Identity(3, 3), 50000, 3);
  CHECK(std::abs(w.mean) <= 3.0 * w.std_error);
  // sd of a single standard gaussian is 1.
  CHECK(w.std_error == doctest::Approx(1.0 / std::sqrt(50000.0)).epsilon(0.02));
}

TEST_CASE("circle net agrees with a direct Monte Carlo on the same net") {
  Matrix net(360, 2);
  for (int k = 0; k < 360; ++k) {
    net(k, 0) = std::cos(k * M_PI / 180.0);
    net(k, 1) = std::sin(k * M_PI / 180.0);
  }
  const auto w = gaussian_sup(FunctionClass::linear(net), Matrix::Identity(2, 2), 20000, 99);

  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g;
  const int draws = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const Vector z = Vector::NullaryExpr(2, [&](Eigen::Index) { return g(rng); });
    const double m = (net * z).maxCoeff();
    sum += m;
    sq += m * m;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  CHECK(std::abs(w.mean - mean) <= 3.0 * std::hypot(se, w.std_error));
  // The max over a fine net is close to E|G| = sqrt(pi / 2).
  CHECK(w.mean == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(0.02));
}

TEST_CASE("covariance enters through its square root") {
  Matrix t(2, 1);
  t << 1, -1;
  Matrix sigma(1, 1);
  sigma << 9.0;
  const auto w = gaussian_sup(FunctionClass::linear(t), sigma, 100000, 5);
  CHECK(std::abs(w.mean - 3.0 * std::sqrt(2.0 / M_PI)) <= 3.0 * w.std_error);
}

TEST_CASE("worker count changes the stream but not the statistics") {
  const auto cls = FunctionClass::linear(Matrix::Identity(4, 4));
  const auto a = gaussian_sup(cls, Matrix::Identity(4, 4), 40000, 8, 1);
  const auto b = gaussian_sup(cls, Matrix::Identity(4, 4), 40000, 8, 4);
  CHECK(b.workers == 4);
  CHECK(std::abs(a.mean - b.mean) <= 4.0 * std::hypot(a.std_error, b.std_error));
  const auto c = gaussian_sup(cls, Matrix::Identity(4, 4), 40000, 8, 4);
  CHECK(b.mean == c.mean);
}

TEST_CASE("width error paths") {
  const auto generic = FunctionClass::generic({"f"}, [](FunctionId, std::span<const double>) { return 0.0; });
  try {
    gaussian_sup(generic, Matrix::Identity(1, 1), 10, 1);
    FAIL("generic class accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotLinearClass);
  }
  const auto cls = FunctionClass::linear(Matrix::Identity(2, 2));
  Matrix neg(2, 2);
  neg << 1, 0, 0, -1;
  try {
    gaussian_sup(cls, neg, 10, 1);
    FAIL("indefinite covariance accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
  CHECK_THROWS_AS(gaussian_sup(cls, Matrix::Identity(2, 2), 1, 1), Error);
  CHECK_THROWS_AS(gaussian_sup(cls, Matrix::Identity(3, 3), 10, 1), Error);
}

TEST_CASE("critical dimension") {
  WidthEstimate w;
  w.mean = 1.0;
  CHECK(critical_dimension(w, 1.0) == 1.0);
  w.mean = 3.0;
  CHECK(critical_dimension(w, 2.0) == 2.25);
  try {
    critical_dimension(w, 0.0);
    FAIL("zero diameter accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroDiameter);
  }
}

TEST_CASE("critical dimension of the signed basis matches its Monte Carlo width") {
  const std::size_t d = 8;
  Matrix t(2 * d, d);
  t << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  const auto cls = FunctionClass::linear(t);
  const auto w = gaussian_sup(cls, Matrix::Identity(d, d), 50000, 21);
  const double dstar = critical_dimension(w, 1.0);
  CHECK(dstar == doctest::Approx(w.mean * w.mean));
  // E max |g_i| over 8 coordinates sits between 1 and sqrt(2 ln 16).
  CHECK(w.mean > 1.0);
  CHECK(w.mean < std::sqrt(2.0 * std::log(16.0)));
}

}
