#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "chainmean/function_class.hpp"

using namespace chainmean;

TEST_SUITE("function_class") {

TEST_CASE("exact L2 distance on a linear class") {
  Matrix t(2, 2);
  t << 1, 0, 0, 1;
  const auto cls = FunctionClass::linear(t);
  const auto oracle = DistanceOracle::exact_l2(cls, Matrix::Identity(2, 2));
  CHECK(rho(oracle, 0, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(rho(oracle, 0, 0) == 0.0);
  CHECK(rho(oracle, 1, kZeroFunction) == doctest::Approx(1.0));
  CHECK(rho(oracle, kZeroFunction, kZeroFunction) == 0.0);
}

TEST_CASE("exact L2 distance uses the covariance") {
  Matrix t(2, 2);
  t << 1, 0, 0, 1;
  const auto cls = FunctionClass::linear(t);
  Matrix sigma(2, 2);
  sigma << 4, 1, 1, 2;
  const auto oracle = DistanceOracle::exact_l2(cls, sigma);
  // <Sigma (e1 - e2), e1 - e2> = 4 - 2 + 2 = 4.
  CHECK(rho(oracle, 0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d_F(cls, oracle) == doctest::Approx(2.0));
}

TEST_CASE("empirical oracle is the RMS over the auxiliary sample") {
  Matrix t(2, 2);
  t << 1, 0, 0, 1;
  const auto cls = FunctionClass::linear(t);
  Matrix aux(2, 2);
  aux << 1, 0, -1, 0;
  const auto oracle = DistanceOracle::empirical(cls, Sample(aux));
  CHECK(rho(oracle, 0, kZeroFunction) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rho(oracle, 1, kZeroFunction) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("empirical oracle on a generic class") {
  const auto cls = FunctionClass::generic({"x", "x2"}, [](FunctionId f, std::span<const double> p) {
    return f == 0 ? p[0] : p[0] * p[0];
  });
  Matrix aux(3, 1);
  aux << 1, 2, 3;
  const auto oracle = DistanceOracle::empirical(cls, Sample(aux));
  // differences x - x^2 = 0, -2, -6.
  CHECK(rho(oracle, 0, 1) == doctest::Approx(std::sqrt(40.0 / 3.0)).epsilon(1e-12));
  CHECK(rho(oracle, 1, kZeroFunction) == doctest::Approx(std::sqrt(98.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("user oracle delegates and ids are checked") {
  const auto oracle = DistanceOracle::user_provided(3, [](FunctionId f, FunctionId h) {
    const double a = f == kZeroFunction ? 0.0 : static_cast<double>(f + 1);
    const double b = h == kZeroFunction ? 0.0 : static_cast<double>(h + 1);
    return std::abs(a - b);
  });
  CHECK(rho(oracle, 0, 2) == 2.0);
  CHECK(rho(oracle, 2, kZeroFunction) == 3.0);
  try {
    rho(oracle, 3, 0);
    FAIL("unknown id accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownIdentifier);
  }
}

TEST_CASE("estimate_RF examples") {
  Matrix t(1, 1);
  t << 1;
  const auto cls = FunctionClass::linear(t);
  Matrix ones(2, 1);
  ones << 1, -1;
  CHECK(estimate_RF(cls, TransformPair::square(), Sample(ones)) == doctest::Approx(2.0));

  Matrix mixed(2, 1);
  mixed << 1, 3;
  const double expected = std::pow(0.5 * (std::pow(2.0, 4) + std::pow(6.0, 4)), 0.25);
  CHECK(estimate_RF(cls, TransformPair::square(), Sample(mixed)) == doctest::Approx(expected));

  CHECK(estimate_RF(cls, TransformPair::abs_power(2.0), Sample(Matrix::Zero(4, 1))) == 0.0);
}

TEST_CASE("d_F examples") {
  const auto sphere = FunctionClass::linear(Matrix::Identity(3, 3));
  CHECK(d_F(sphere, DistanceOracle::exact_l2(sphere, Matrix::Identity(3, 3))) == doctest::Approx(1.0));

  const auto zero = FunctionClass::generic({"zero"}, [](FunctionId, std::span<const double>) { return 0.0; });
  CHECK(d_F(zero, DistanceOracle::empirical(zero, Sample(Matrix::Ones(5, 2)))) == 0.0);
}

TEST_CASE("function class validation") {
  CHECK_THROWS_AS(FunctionClass::linear(Matrix(0, 3)), Error);
  CHECK_THROWS_AS(FunctionClass::generic({"a", "a"}, [](FunctionId, std::span<const double>) { return 0.0; }),
                  Error);
  const auto cls = FunctionClass::linear(Matrix::Identity(2, 2), {"first", "second"});
  CHECK(cls.find("second") == FunctionId{1});
  CHECK_FALSE(cls.find("third").has_value());
  CHECK(cls.name(0) == "first");
  CHECK_THROWS_AS(cls.name(2), Error);
  CHECK(cls.declared_kappa() == 1.0);
  FunctionClass copy = cls;
  CHECK_THROWS_AS(copy.declare_constants(0.5, 1.0), Error);
  copy.declare_constants(2.0, 3.0);
  CHECK(copy.declared_L() == 3.0);

  const auto generic = FunctionClass::generic({"g"}, [](FunctionId, std::span<const double>) { return 1.0; });
  try {
    (void)generic.directions();
    FAIL("generic class exposed directions");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotLinearClass);
  }
}

TEST_CASE("linear evaluation is the inner product") {
  Matrix t(2, 3);
  t << 1, 2, 3, -1, 0, 0.5;
  const auto cls = FunctionClass::linear(t);
  Matrix x(2, 3);
  x << 1, 1, 1, 2, -1, 4;
  const Sample s(x);
  const std::vector<FunctionId> ids = {1, 0};
  const Matrix v = cls.evaluate_on(s, ids);
  CHECK(v(0, 0) == -0.5);
  CHECK(v(0, 1) == 6.0);
  CHECK(v(1, 0) == 0.0);
  CHECK(v(1, 1) == 12.0);
  const std::vector<double> p = {2, -1, 4};
  CHECK(cls.evaluate(0, p) == 12.0);
}

TEST_CASE("sample validation") {
  CHECK_THROWS_AS(Sample(Matrix(0, 2)), Error);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(Sample{bad}, Error);
  const Sample s(Matrix::Identity(4, 2));
  CHECK(s.rows(1, 3).size() == 2);
  CHECK_THROWS_AS(s.rows(3, 3), Error);
}

TEST_CASE("csv round trip with and without a header") {
  const auto dir = std::filesystem::temp_directory_path() / "chainmean_fc_csv";
  std::filesystem::create_directories(dir);
  Matrix m(3, 2);
  m << 0.1, -2, 1e-300, 3.5, 7, 1.0 / 3.0;
  write_matrix_csv(dir / "m.csv", m);
  CHECK(read_matrix_csv(dir / "m.csv") == m);

  {
    std::ofstream out(dir / "h.csv");
    out << "x,y\n1,2\n3,4\n";
  }
  CHECK(read_sample_csv(dir / "h.csv").size() == 2);
  {
    std::ofstream out(dir / "ragged.csv");
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(read_matrix_csv(dir / "ragged.csv"), Error);
  CHECK_THROWS_AS(read_matrix_csv(dir / "missing.csv"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("psd square root") {
  Matrix sigma(2, 2);
  sigma << 4, 1, 1, 2;
  const Matrix r = psd_sqrt(sigma);
  CHECK((r * r - sigma).norm() < 1e-12);
  Matrix near(2, 2);
  near << 1, 0, 0, -1e-12;
  CHECK_NOTHROW(psd_sqrt(near));
  Matrix neg(2, 2);
  neg << 1, 0, 0, -1;
  try {
    psd_sqrt(neg);
    FAIL("negative eigenvalue accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
  CHECK_THROWS_AS(psd_sqrt(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("transform pairs") {
  const auto sq = TransformPair::square();
  CHECK(sq.u(-3.0) == 9.0);
  CHECK(sq.v(3.0) == 3.0);
  const auto ap = TransformPair::abs_power(2.5);
  CHECK(ap.u(-4.0) == doctest::Approx(32.0));
  CHECK(ap.v(4.0) == doctest::Approx(2.5 * 8.0));
  CHECK_THROWS_AS(TransformPair::abs_power(1.5), Error);
  const auto id = TransformPair::identity();
  CHECK(id.u(-2.0) == -2.0);
  const auto cu = TransformPair::custom([](double t) { return 3.0 * t; }, [](double) { return 3.0; });
  Matrix m(1, 2);
  m << 1, -2;
  cu.apply_u(m);
  CHECK(m(0, 1) == -6.0);
  CHECK_THROWS_AS(TransformPair::custom(nullptr, nullptr), Error);
}

}
