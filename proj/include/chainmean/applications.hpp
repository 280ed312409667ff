#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chainmean/chaining.hpp"
#include "chainmean/function_class.hpp"
#include "chainmean/scalar_est.hpp"

namespace chainmean {

// How the applications run the uniform estimator.
struct UniformFitOptions {
  double delta = 0.01;
  double eta = 0.0;
  EstimatorKind estimator = EstimatorKind::MedianOfMeans;
  BlockConstants block_constants;
  ScheduleConstants schedule_constants;
  // When set, rho is the exact L2 distance under this matrix. Otherwise the
  // sample is split: the first ceil(N/2) rows feed the estimator and the rest
  // build an Empirical distance oracle.
  std::optional<Matrix> prior_covariance;
};

// Runs the corrupted uniform estimator over the Linear class of `directions`
// with the given transform, handling the distance oracle and schedule.
UniformEstimate fit_linear_class(const Sample& sample, const Matrix& directions,
                                 const TransformPair& u, const UniformFitOptions& options);

struct LinearClassFit {
  UniformEstimate estimate;
  AdmissibleSequence sequence;
};

// fit_linear_class, also returning the sequence it built.
LinearClassFit fit_linear_class_detailed(const Sample& sample, const Matrix& directions,
                                         const TransformPair& u, const UniformFitOptions& options);

// Data-driven membership surrogate for the L_p unit ball on the cone spanned
// by a finite direction set T of unit vectors.
class LpOracle {
 public:
  // psi_values[i] estimates E|<X, t_i>|^p; negatives are clipped to 0.
  LpOracle(double p, Matrix directions, std::vector<double> psi_values, double epsilon = 0.0);

  static LpOracle fit(const Sample& sample, Matrix directions, double p,
                      const UniformFitOptions& options = {}, double epsilon = 0.0);

  double p() const noexcept { return p_; }
  const Matrix& directions() const noexcept { return directions_; }
  const std::vector<double>& psi_values() const noexcept { return psi_values_; }
  double epsilon() const noexcept { return epsilon_; }

  // Index of the direction equal to z / |z| within 1e-9, if any.
  std::optional<std::size_t> match(const Vector& z) const;

  // sup{lambda : lambda * t_i accepted} = psi_i^(-1/p); infinite when psi_i = 0.
  double boundary_radius(std::size_t direction) const;

 private:
  double p_;
  Matrix directions_;
  std::vector<double> psi_values_;
  double epsilon_;
};

// |z|^p * Psi(z / |z|).
double lp_psi1(const LpOracle& oracle, const Vector& z);

// z == 0 or lp_psi1(z) <= 1.
bool lp_membership(const LpOracle& oracle, const Vector& z);

// e_1..e_d followed by (e_i + e_j)/sqrt(2) for i < j, one direction per row.
Matrix covariance_direction_set(std::size_t d);

// Frobenius-nearest PSD matrix: symmetrize, clip negative eigenvalues to 0.
Matrix psd_project(const Matrix& m);

struct CovarianceEstimate {
  Matrix matrix;        // symmetric PSD
  Matrix raw_matrix;    // polarization output before projection
  Matrix directions;    // the direction set, one per row
  std::vector<double> psi_values;        // Psi(z) per direction
  std::vector<double> direction_errors;  // |<matrix z, z> - Psi(z)| per direction
  double clip_magnitude = 0.0;           // sum of clipped negative eigenvalues
  double delta = 0.0;
  double eta = 0.0;
  bool trivial = false;
  std::optional<std::string> warning;
};

CovarianceEstimate covariance_estimate(const Sample& sample, const UniformFitOptions& options = {});

nlohmann::json covariance_diagnostics_json(const CovarianceEstimate& est);

}  // namespace chainmean
