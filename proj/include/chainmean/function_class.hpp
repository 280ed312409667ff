#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainmean/types.hpp"

namespace chainmean {

// N points in R^d, one per row. All entries finite, N >= 1.
class Sample {
 public:
  explicit Sample(Matrix points);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Matrix& points() const noexcept { return points_; }

  // Rows [begin, end) as a new sample.
  Sample rows(std::size_t begin, std::size_t end) const;

 private:
  Matrix points_;
};

// Reads one point per row; a first row that does not parse as numbers is
// treated as a header.
Matrix read_matrix_csv(const std::filesystem::path& path);
Sample read_sample_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// A finite family of real-valued functions on R^d.
//
// Linear classes hold one direction t per row and evaluate f_t(x) = <x, t>.
// Generic classes evaluate through a callback on a sample row.
class FunctionClass {
 public:
  enum class Kind { Generic, Linear };
  using Evaluator = std::function<double(FunctionId, std::span<const double>)>;

  static FunctionClass linear(Matrix directions, std::vector<std::string> names = {});
  static FunctionClass generic(std::vector<std::string> names, Evaluator evaluator);

  Kind kind() const noexcept { return kind_; }
  bool is_linear() const noexcept { return kind_ == Kind::Linear; }
  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(FunctionId id) const;
  std::optional<FunctionId> find(const std::string& name) const;

  // Linear classes only.
  const Matrix& directions() const;

  double evaluate(FunctionId id, std::span<const double> point) const;

  // Column j holds ids[j] evaluated on every sample row.
  Matrix evaluate_on(const Sample& sample, std::span<const FunctionId> ids) const;

  // Declared distortion of the distance oracle and the L4-L2 constant. Recorded
  // for diagnostics only; nothing checks them.
  double declared_kappa() const noexcept { return kappa_; }
  double declared_L() const noexcept { return norm_equivalence_; }
  void declare_constants(double kappa, double norm_equivalence);

 private:
  FunctionClass(Kind kind, std::vector<std::string> names, Matrix directions, Evaluator evaluator);

  Kind kind_;
  std::vector<std::string> names_;
  Matrix directions_;
  Evaluator evaluator_;
  double kappa_ = 1.0;
  double norm_equivalence_ = 1.0;
};

// The pair (u, v) with u(0) = 0 and |u(s) - u(t)| <= v(|s| + |t|) |s - t|.
class TransformPair {
 public:
  enum class Kind { Square, AbsPower, Identity, Custom };
  using Fn = std::function<double(double)>;

  static TransformPair square() { return TransformPair(Kind::Square, 2.0, nullptr, nullptr); }
  static TransformPair abs_power(double p);
  static TransformPair identity() { return TransformPair(Kind::Identity, 1.0, nullptr, nullptr); }
  static TransformPair custom(Fn u, Fn v);

  Kind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }

  double u(double t) const {
    switch (kind_) {
      case Kind::Square: return t * t;
      case Kind::AbsPower: return std::pow(std::abs(t), p_);
      case Kind::Identity: return t;
      case Kind::Custom: return u_(t);
    }
    return 0.0;
  }

  double v(double t) const {
    switch (kind_) {
      case Kind::Square: return t;
      case Kind::AbsPower: return p_ * std::pow(std::abs(t), p_ - 1.0);
      case Kind::Identity: return 1.0;
      case Kind::Custom: return v_(t);
    }
    return 0.0;
  }

  // Applies u in place.
  void apply_u(Eigen::Ref<Matrix> values) const;

 private:
  TransformPair(Kind kind, double p, Fn u, Fn v)
      : kind_(kind), p_(p), u_(std::move(u)), v_(std::move(v)) {}

  Kind kind_;
  double p_;
  Fn u_;
  Fn v_;
};

// The distance functional rho on F ∪ {0}.
//
// ExactL2 knows the covariance of a Linear class and returns the true L2
// distance. Empirical uses the root-mean-square difference over an auxiliary
// sample, which should be disjoint from the estimation sample. UserProvided
// forwards to a callback.
class DistanceOracle {
 public:
  enum class Kind { ExactL2, Empirical, UserProvided };
  using Callback = std::function<double(FunctionId, FunctionId)>;

  static DistanceOracle exact_l2(const FunctionClass& cls, const Matrix& covariance);
  static DistanceOracle empirical(const FunctionClass& cls, const Sample& auxiliary);
  static DistanceOracle user_provided(std::size_t class_size, Callback callback);

  Kind kind() const noexcept { return kind_; }
  std::size_t class_size() const noexcept { return class_size_; }

  double operator()(FunctionId f, FunctionId h) const;

 private:
  DistanceOracle(Kind kind, std::size_t class_size) : kind_(kind), class_size_(class_size) {}

  double compute(FunctionId f, FunctionId h) const;

  Kind kind_;
  std::size_t class_size_;
  // Rows are feature vectors whose Euclidean distance is rho, scaled by
  // 1/sqrt(M) for empirical generic classes.
  std::shared_ptr<const Matrix> embedding_;
  Callback callback_;
};

// Throws UnknownIdentifier for ids outside the class (other than kZeroFunction).
double rho(const DistanceOracle& oracle, FunctionId f, FunctionId h);

// max_f (mean_i v^4(2 |f(X_i)|))^{1/4}; a diagnostic, never used by the estimator.
double estimate_RF(const FunctionClass& cls, const TransformPair& u, const Sample& sample);

// max_f rho(f, 0).
double d_F(const FunctionClass& cls, const DistanceOracle& oracle);

// Symmetric PSD square root, with eigenvalues in [-tolerance, 0) clipped to 0.
// Throws NotPSD for anything more negative and NotSquare for non-square input.
Matrix psd_sqrt(const Matrix& covariance, double tolerance = 1e-10);

}  // namespace chainmean
