#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "chainmean/types.hpp"

namespace chainmean {

// Constants of the block/trim count k = ceil(log_coeff * log(1/delta) + eta_coeff * eta * N).
struct BlockConstants {
  double log_coeff = 8.0;
  double eta_coeff = 32.0;
};

// Number of median-of-means blocks: the formula above, clamped to [1, N] and
// made odd (incremented, or decremented when already at an even N).
std::size_t block_count(std::size_t n, Confidence confidence, double eta,
                        const BlockConstants& constants = {});

// Median of the means of k contiguous blocks. The first N mod k blocks get one
// extra element. k must be odd and in [1, N].
double median_of_block_means(std::span<const double> values, std::size_t k);

double median_of_means(std::span<const double> values, Confidence confidence,
                       const BlockConstants& constants = {});

// Median of means with the block count enlarged for an eta-fraction of
// corrupted entries. eta must be < 1/2.
double mom_corrupted(std::span<const double> values, Confidence confidence, double eta,
                     const BlockConstants& constants = {});

// Mean after removing the m largest and m smallest values.
double trimmed_mean_m(std::span<const double> values, std::size_t m);

// Trimmed mean with m = ceil(eta * N + log_coeff * log(1/delta)).
double trimmed_mean(std::span<const double> values, Confidence confidence, double eta,
                    const BlockConstants& constants = {});

inline double median_of_means(std::span<const double> values, double delta) {
  return median_of_means(values, Confidence::from_delta(delta));
}
inline double mom_corrupted(std::span<const double> values, double delta, double eta) {
  return mom_corrupted(values, Confidence::from_delta(delta), eta);
}
inline double trimmed_mean(std::span<const double> values, double delta, double eta) {
  return trimmed_mean(values, Confidence::from_delta(delta), eta);
}

enum class EstimatorKind { MedianOfMeans, TrimmedMean, ExactMeanOracle };

// Which scalar mean estimator the uniform estimator calls on every level.
//
// ExactMeanOracle ignores the data and reports a caller-supplied expectation
// for each function; it exists so the chaining decomposition can be checked
// with every statistical error removed.
class ScalarEstimatorSpec {
 public:
  using TrueMean = std::function<double(FunctionId)>;

  static ScalarEstimatorSpec median_of_means(double delta, double eta = 0.0,
                                             BlockConstants constants = {});
  static ScalarEstimatorSpec trimmed_mean(double delta, double eta = 0.0,
                                          BlockConstants constants = {});
  static ScalarEstimatorSpec exact_mean_oracle(TrueMean true_mean, double delta = 0.5,
                                               double eta = 0.0);

  EstimatorKind kind() const noexcept { return kind_; }
  double delta() const noexcept { return delta_; }
  double eta() const noexcept { return eta_; }
  const BlockConstants& constants() const noexcept { return constants_; }
  bool is_robust() const noexcept { return kind_ != EstimatorKind::ExactMeanOracle; }

  // Applies the robust estimator at the given confidence with this spec's eta.
  // Not valid for ExactMeanOracle.
  double estimate(std::span<const double> values, Confidence confidence) const;

  // Only valid for ExactMeanOracle.
  double true_mean(FunctionId id) const;

 private:
  ScalarEstimatorSpec(EstimatorKind kind, double delta, double eta, BlockConstants constants,
                      TrueMean true_mean);

  EstimatorKind kind_;
  double delta_;
  double eta_;
  BlockConstants constants_;
  TrueMean true_mean_;
};

}  // namespace chainmean
