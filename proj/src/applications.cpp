#include "chainmean/applications.hpp"

#include <cmath>
#include <limits>

namespace chainmean {

LinearClassFit fit_linear_class_detailed(const Sample& sample, const Matrix& directions,
                                         const TransformPair& u, const UniformFitOptions& options) {
  const FunctionClass cls = FunctionClass::linear(directions);
  const auto build = [&](const Sample& est_sample, const DistanceOracle& oracle) {
    AdmissibleSequence seq = build_admissible_sequence(
        cls, oracle, deepest_level(est_sample.size(), options.schedule_constants));
    const LevelSchedule schedule = level_schedule(est_sample.size(), options.delta, options.eta, seq,
                                                  options.schedule_constants);
    const ScalarEstimatorSpec est =
        options.estimator == EstimatorKind::TrimmedMean
            ? ScalarEstimatorSpec::trimmed_mean(options.delta, options.eta, options.block_constants)
            : ScalarEstimatorSpec::median_of_means(options.delta, options.eta,
                                                   options.block_constants);
    UniformEstimate out = estimate_uniform_corrupted(est_sample, cls, u, seq, schedule, est);
    return LinearClassFit{std::move(out), std::move(seq)};
  };

  if (options.prior_covariance) {
    return build(sample, DistanceOracle::exact_l2(cls, *options.prior_covariance));
  }
  if (sample.size() < 2) {
    throw Error(ErrorCode::SampleTooSmall, "need two points to hold out a distance sample");
  }
  const std::size_t split = (sample.size() + 1) / 2;
  const Sample est_sample = sample.rows(0, split);
  const Sample aux = sample.rows(split, sample.size());
  return build(est_sample, DistanceOracle::empirical(cls, aux));
}

UniformEstimate fit_linear_class(const Sample& sample, const Matrix& directions,
                                 const TransformPair& u, const UniformFitOptions& options) {
  return fit_linear_class_detailed(sample, directions, u, options).estimate;
}

LpOracle::LpOracle(double p, Matrix directions, std::vector<double> psi_values, double epsilon)
    : p_(p), directions_(std::move(directions)), psi_values_(std::move(psi_values)), epsilon_(epsilon) {
  if (!(p_ >= 2.0)) throw Error(ErrorCode::InvalidArgument, "p must be >= 2");
  if (directions_.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no directions");
  if (psi_values_.size() != static_cast<std::size_t>(directions_.rows())) {
    throw Error(ErrorCode::InvalidArgument, "one Psi value per direction required");
  }
  for (Eigen::Index i = 0; i < directions_.rows(); ++i) {
    if (std::abs(directions_.row(i).norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "direction " + std::to_string(i) + " is not unit norm");
    }
  }
  for (double& v : psi_values_) v = std::max(0.0, v);
}

LpOracle LpOracle::fit(const Sample& sample, Matrix directions, double p,
                       const UniformFitOptions& options, double epsilon) {
  const UniformEstimate est = fit_linear_class(sample, directions, TransformPair::abs_power(p), options);
  return LpOracle(p, std::move(directions), est.values, epsilon);
}

std::optional<std::size_t> LpOracle::match(const Vector& z) const {
  const double norm = z.norm();
  if (norm == 0.0) return std::nullopt;
  if (z.size() != directions_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "query dimension does not match the directions");
  }
  const Vector w = z / norm;
  for (Eigen::Index i = 0; i < directions_.rows(); ++i) {
    if ((directions_.row(i).transpose() - w).cwiseAbs().maxCoeff() <= 1e-9) {
      return static_cast<std::size_t>(i);
    }
  }
  return std::nullopt;
}

double LpOracle::boundary_radius(std::size_t direction) const {
  const double psi = psi_values_.at(direction);
  if (psi == 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(psi, -1.0 / p_);
}

double lp_psi1(const LpOracle& oracle, const Vector& z) {
  const double norm = z.norm();
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "lp_psi1 is undefined at 0");
  const auto idx = oracle.match(z);
  if (!idx) throw Error(ErrorCode::NotInCone, "z / |z| matches no direction of T");
  return std::pow(norm, oracle.p()) * oracle.psi_values()[*idx];
}

bool lp_membership(const LpOracle& oracle, const Vector& z) {
  if (z.norm() == 0.0) return true;
  return lp_psi1(oracle, z) <= 1.0;
}

Matrix covariance_direction_set(std::size_t d) {
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be >= 1");
  const auto dim = static_cast<Eigen::Index>(d);
  Matrix out = Matrix::Zero(dim * (dim + 1) / 2, dim);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < dim; ++i) out(row++, i) = 1.0;
  const double h = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      out(row, i) = h;
      out(row, j) = h;
      ++row;
    }
  }
  return out;
}

namespace {

// Returns the projection and the total magnitude of clipped eigenvalues.
std::pair<Matrix, double> clip_spectrum(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::NotSquare, "matrix must be square");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector values = eig.eigenvalues();
  double clipped = 0.0;
  if (values.minCoeff() >= 0.0) return {sym, 0.0};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      clipped += -values(i);
      values(i) = 0.0;
    }
  }
  Matrix out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  return {0.5 * (out + out.transpose()), clipped};
}

}  // namespace

Matrix psd_project(const Matrix& m) { return clip_spectrum(m).first; }

CovarianceEstimate covariance_estimate(const Sample& sample, const UniformFitOptions& options) {
  const std::size_t d = sample.dim();
  const auto dim = static_cast<Eigen::Index>(d);
  CovarianceEstimate out;
  out.directions = covariance_direction_set(d);
  out.delta = options.delta;
  out.eta = options.eta;

  const UniformEstimate est = fit_linear_class(sample, out.directions, TransformPair::square(), options);
  out.psi_values = est.values;
  out.trivial = est.trivial;
  if (est.trivial) {
    out.matrix = Matrix::Zero(dim, dim);
    out.raw_matrix = out.matrix;
    out.direction_errors.assign(out.psi_values.size(), 0.0);
    return out;
  }

  Matrix raw(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) raw(i, i) = est.values[static_cast<std::size_t>(i)];
  std::size_t idx = d;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      raw(i, j) = est.values[idx++] - 0.5 * (raw(i, i) + raw(j, j));
      raw(j, i) = raw(i, j);
    }
  }
  out.raw_matrix = raw;
  std::tie(out.matrix, out.clip_magnitude) = clip_spectrum(raw);

  out.direction_errors.resize(out.psi_values.size());
  for (Eigen::Index r = 0; r < out.directions.rows(); ++r) {
    const Vector z = out.directions.row(r).transpose();
    const auto k = static_cast<std::size_t>(r);
    out.direction_errors[k] = std::abs(z.dot(out.matrix * z) - out.psi_values[k]);
  }

  const double pilot_trace = raw.diagonal().sum();
  const double needed = pilot_trace + std::log(1.0 / options.delta);
  if (static_cast<double>(sample.size()) < needed) {
    out.warning = "N = " + std::to_string(sample.size()) +
                  " is below Tr(pilot) + log(1/delta) = " + std::to_string(needed) +
                  "; the operator-norm guarantee may not hold";
  }
  return out;
}

nlohmann::json covariance_diagnostics_json(const CovarianceEstimate& est) {
  nlohmann::json dirs = nlohmann::json::array();
  for (Eigen::Index r = 0; r < est.directions.rows(); ++r) {
    std::vector<double> z;
    for (Eigen::Index c = 0; c < est.directions.cols(); ++c) z.push_back(est.directions(r, c));
    dirs.push_back({{"direction", z},
                    {"psi", est.psi_values[static_cast<std::size_t>(r)]},
                    {"error", est.direction_errors[static_cast<std::size_t>(r)]}});
  }
  nlohmann::json out = {{"delta", est.delta},
                        {"eta", est.eta},
                        {"trivial", est.trivial},
                        {"clip_magnitude", est.clip_magnitude},
                        {"directions", dirs}};
  if (est.warning) out["warning"] = *est.warning;
  return out;
}

}  // namespace chainmean
