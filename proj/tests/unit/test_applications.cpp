#include <doctest.h>

#include <cmath>

#include "chainmean/applications.hpp"
#include "chainmean/harness.hpp"
#include "chainmean/rng.hpp"

using namespace chainmean;

namespace {

double op_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix unit_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (const double v : r) m(i, j++) = v;
    m.row(i) /= m.row(i).norm();
    ++i;
  }
  return m;
}

}  // namespace

TEST_SUITE("applications") {

TEST_CASE("lp_psi1 scales by |z|^p") {
  const Matrix t = unit_rows({{1, 0}, {0, 1}});
  const LpOracle oracle(2.0, t, {0.25, 0.7});
  Vector z(2);
  z << 1, 0;
  CHECK(lp_psi1(oracle, z) == 0.25);
  z << 2, 0;
  CHECK(lp_psi1(oracle, z) == 1.0);
  z << 0, 0.5;
  CHECK(lp_psi1(oracle, z) == doctest::Approx(0.7 * 0.25));
  const LpOracle cubic(3.0, t, {0.5, 1.0});
  z << 0, 2;
  CHECK(lp_psi1(cubic, z) == doctest::Approx(8.0));
}

TEST_CASE("lp_psi1 error paths") {
  const LpOracle oracle(2.0, unit_rows({{1, 0}}), {1.0});
  Vector z(2);
  z << 0, 0;
  try {
    lp_psi1(oracle, z);
    FAIL("zero vector accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
  z << 1, 1;
  try {
    lp_psi1(oracle, z);
    FAIL("vector off the cone accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInCone);
  }
  z << -1, 0;
  CHECK_THROWS_AS(lp_psi1(oracle, z), Error);
}

TEST_CASE("membership examples") {
  const LpOracle oracle(2.0, unit_rows({{1, 0, 0}}), {1.0});
  CHECK(lp_membership(oracle, Vector::Zero(3)));
  Vector z = Vector::Zero(3);
  z(0) = 1.0;
  CHECK(lp_membership(oracle, z));
  for (const double eps : {1e-12, 1e-6, 0.1}) {
    z(0) = 1.0 + eps;
    CHECK_FALSE(lp_membership(oracle, z));
  }
  z << 0, 1, 0;
  CHECK_THROWS_AS(lp_membership(oracle, z), Error);
}

TEST_CASE("oracle construction checks") {
  CHECK_THROWS_AS(LpOracle(1.5, unit_rows({{1}}), {1.0}), Error);
  CHECK_THROWS_AS(LpOracle(2.0, unit_rows({{1}}), {1.0, 2.0}), Error);
  Matrix not_unit(1, 2);
  not_unit << 1, 1;
  CHECK_THROWS_AS(LpOracle(2.0, not_unit, {1.0}), Error);
  const LpOracle clipped(2.0, unit_rows({{1, 0}}), {-0.01});
  CHECK(clipped.psi_values()[0] == 0.0);
  CHECK(std::isinf(clipped.boundary_radius(0)));
  const LpOracle quarter(2.0, unit_rows({{1, 0}}), {0.25});
  CHECK(quarter.boundary_radius(0) == doctest::Approx(2.0));
}

TEST_CASE("fitted L2 ball of an isotropic gaussian has radius near 1") {
  DistributionSpec spec;
  spec.d = 3;
  const Matrix t = unit_rows({{1, 0, 0}});
  int inside = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sample x = generate_sample(spec, 100000, derive_seed(2100, static_cast<std::uint64_t>(trial)));
    const LpOracle oracle = LpOracle::fit(x, t, 2.0);
    const double r = oracle.boundary_radius(0);
    if (r >= 0.9 && r <= 1.1) ++inside;
  }
  CHECK(inside >= 95);
}

TEST_CASE("covariance direction set") {
  CHECK(covariance_direction_set(1) == Matrix::Identity(1, 1));
  const Matrix two = covariance_direction_set(2);
  REQUIRE(two.rows() == 3);
  CHECK(two.row(2)(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(two.row(2)(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(covariance_direction_set(20).rows() == 210);
  const Matrix five = covariance_direction_set(5);
  for (Eigen::Index i = 0; i < five.rows(); ++i) CHECK(five.row(i).norm() == doctest::Approx(1.0));
  CHECK_THROWS_AS(covariance_direction_set(0), Error);
}

TEST_CASE("psd projection examples") {
  Matrix psd(2, 2);
  psd << 2, 1, 1, 2;
  CHECK((psd_project(psd) - psd).cwiseAbs().maxCoeff() <= 1e-12);

  Matrix diag(2, 2);
  diag << 1, 0, 0, -1;
  Matrix expected(2, 2);
  expected << 1, 0, 0, 0;
  CHECK((psd_project(diag) - expected).cwiseAbs().maxCoeff() <= 1e-12);

  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  Matrix rank_one(2, 2);
  rank_one << 0.5, 0.5, 0.5, 0.5;
  CHECK((psd_project(swap) - rank_one).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS(psd_project(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("point mass at zero gives the zero matrix") {
  const CovarianceEstimate est = covariance_estimate(Sample(Matrix::Zero(4096, 3)));
  CHECK(est.matrix == Matrix::Zero(3, 3));
  CHECK(est.clip_magnitude == 0.0);
  CHECK(est.directions.rows() == 6);
}

TEST_CASE("trivial regime gives the zero matrix") {
  UniformFitOptions opts;
  opts.eta = 0.3;
  const CovarianceEstimate est = covariance_estimate(Sample(Matrix::Ones(4096, 2)), opts);
  CHECK(est.trivial);
  CHECK(est.matrix == Matrix::Zero(2, 2));
}

TEST_CASE("isotropic covariance recovery") {
  DistributionSpec spec;
  spec.d = 2;
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Sample x = generate_sample(spec, 100000, derive_seed(2200, static_cast<std::uint64_t>(trial)));
    const CovarianceEstimate est = covariance_estimate(x);
    if (op_norm(est.matrix - Matrix::Identity(2, 2)) <= 0.1) ++good;
  }
  CHECK(good >= 95);
}

TEST_CASE("spiked covariance recovery against the empirical covariance") {
  Matrix sigma(2, 2);
  sigma << 4, 0, 0, 1;
  DistributionSpec spec;
  spec.d = 2;
  spec.covariance = sigma;
  CorruptionModel adv;
  adv.kind = CorruptionModel::Kind::SpikeReplace;
  adv.eta = 0.02;
  adv.magnitude = 100.0;
  adv.random_direction = true;
  UniformFitOptions opts;
  opts.eta = 0.02;
  int good = 0, emp_bad = 0;
  const int trials = 50;
  for (int trial = 0; trial < trials; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const Sample x = corrupt(generate_sample(spec, 100000, derive_seed(2300, seed)), adv, derive_seed(2301, seed));
    const CovarianceEstimate est = covariance_estimate(x, opts);
    if (op_norm(est.matrix - sigma) <= 1.0) ++good;
    const Matrix& p = x.points();
    const Matrix c = p.rowwise() - p.colwise().mean();
    if (op_norm(c.transpose() * c / static_cast<double>(p.rows()) - sigma) >= 5.0) ++emp_bad;
  }
  CHECK(good >= 45);
  CHECK(emp_bad == trials);
}

TEST_CASE("prior covariance switches to the exact oracle on the full sample") {
  DistributionSpec spec;
  spec.d = 2;
  const Sample x = generate_sample(spec, 8192, 31);
  UniformFitOptions with_prior;
  with_prior.prior_covariance = Matrix::Identity(2, 2);
  const UniformEstimate a = fit_linear_class(x, Matrix::Identity(2, 2), TransformPair::square(), with_prior);
  CHECK(a.schedule.n == 8192);
  const UniformEstimate b = fit_linear_class(x, Matrix::Identity(2, 2), TransformPair::square(), {});
  CHECK(b.schedule.n == 4096);
  CHECK_THROWS_AS(fit_linear_class(Sample(Matrix::Zero(1, 2)), Matrix::Identity(2, 2), TransformPair::square(), {}),
                  Error);
}

TEST_CASE("small samples carry a warning") {
  DistributionSpec spec;
  spec.d = 3;
  spec.covariance = Matrix::Identity(3, 3) * 1000.0;
  const CovarianceEstimate est = covariance_estimate(generate_sample(spec, 2048, 4));
  REQUIRE(est.warning.has_value());
  const auto j = covariance_diagnostics_json(est);
  CHECK(j.contains("warning"));
  CHECK(j["directions"].size() == 6);
}

}
