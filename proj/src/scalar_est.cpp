#include "chainmean/scalar_est.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace chainmean {

namespace {

// ceil() that ignores last-ulp noise, e.g. 8 * log(1/e^-1) = 8.000000000000002.
std::size_t tolerant_ceil(double x) {
  const double slack = 1e-9 * std::max(1.0, std::abs(x));
  const double c = std::ceil(x - slack);
  return c <= 0.0 ? 0 : static_cast<std::size_t>(c);
}

void check_eta(double eta, double upper, bool upper_inclusive) {
  if (!(eta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "eta must be >= 0, got " + std::to_string(eta));
  }
  if (upper_inclusive ? eta > upper : eta >= upper) {
    throw Error(ErrorCode::EtaTooLarge,
                "eta = " + std::to_string(eta) + " outside the estimator's range");
  }
}

void check_nonempty(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "no values to estimate from");
}

}  // namespace

std::size_t block_count(std::size_t n, Confidence confidence, double eta,
                        const BlockConstants& constants) {
  if (n == 0) throw Error(ErrorCode::EmptySample, "block_count needs N >= 1");
  check_eta(eta, 1.0, false);
  const double raw = constants.log_coeff * confidence.log_inverse() +
                     constants.eta_coeff * eta * static_cast<double>(n);
  std::size_t k = raw >= static_cast<double>(n) ? n : std::max<std::size_t>(1, tolerant_ceil(raw));
  k = std::min(k, n);
  if (k % 2 == 0) k = (k + 1 <= n) ? k + 1 : k - 1;
  return k;
}

double median_of_block_means(std::span<const double> values, std::size_t k) {
  check_nonempty(values);
  const std::size_t n = values.size();
  if (k == 0 || k > n || k % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "block count must be odd and in [1, N], got " + std::to_string(k));
  }
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<double> means(k);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < k; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    double sum = 0.0;
    for (std::size_t i = pos; i < pos + len; ++i) sum += values[i];
    means[b] = sum / static_cast<double>(len);
    pos += len;
  }
  const auto mid = means.begin() + static_cast<std::ptrdiff_t>(k / 2);
  std::nth_element(means.begin(), mid, means.end());
  return *mid;
}

double median_of_means(std::span<const double> values, Confidence confidence,
                       const BlockConstants& constants) {
  check_nonempty(values);
  return median_of_block_means(values, block_count(values.size(), confidence, 0.0, constants));
}

double mom_corrupted(std::span<const double> values, Confidence confidence, double eta,
                     const BlockConstants& constants) {
  check_nonempty(values);
  check_eta(eta, 0.5, false);
  return median_of_block_means(values, block_count(values.size(), confidence, eta, constants));
}

double trimmed_mean_m(std::span<const double> values, std::size_t m) {
  check_nonempty(values);
  const std::size_t n = values.size();
  if (2 * m >= n) {
    throw Error(ErrorCode::SampleTooSmall, "trimming " + std::to_string(m) +
                                               " from each side of " + std::to_string(n) +
                                               " values leaves nothing");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = m; i < n - m; ++i) sum += sorted[i];
  return sum / static_cast<double>(n - 2 * m);
}

double trimmed_mean(std::span<const double> values, Confidence confidence, double eta,
                    const BlockConstants& constants) {
  check_nonempty(values);
  check_eta(eta, 0.5, false);
  const double raw = eta * static_cast<double>(values.size()) +
                     constants.log_coeff * confidence.log_inverse();
  return trimmed_mean_m(values, tolerant_ceil(raw));
}

ScalarEstimatorSpec::ScalarEstimatorSpec(EstimatorKind kind, double delta, double eta,
                                         BlockConstants constants, TrueMean true_mean)
    : kind_(kind),
      delta_(delta),
      eta_(eta),
      constants_(constants),
      true_mean_(std::move(true_mean)) {
  Confidence::from_delta(delta_);
  check_eta(eta_, 1.0, true);
}

ScalarEstimatorSpec ScalarEstimatorSpec::median_of_means(double delta, double eta,
                                                         BlockConstants constants) {
  return {EstimatorKind::MedianOfMeans, delta, eta, constants, nullptr};
}

ScalarEstimatorSpec ScalarEstimatorSpec::trimmed_mean(double delta, double eta,
                                                      BlockConstants constants) {
  return {EstimatorKind::TrimmedMean, delta, eta, constants, nullptr};
}

ScalarEstimatorSpec ScalarEstimatorSpec::exact_mean_oracle(TrueMean true_mean, double delta,
                                                           double eta) {
  if (!true_mean) {
    throw Error(ErrorCode::InvalidArgument, "ExactMeanOracle needs a true-mean callback");
  }
  return {EstimatorKind::ExactMeanOracle, delta, eta, {}, std::move(true_mean)};
}

double ScalarEstimatorSpec::estimate(std::span<const double> values, Confidence confidence) const {
  switch (kind_) {
    case EstimatorKind::MedianOfMeans:
      return mom_corrupted(values, confidence, eta_, constants_);
    case EstimatorKind::TrimmedMean:
      return chainmean::trimmed_mean(values, confidence, eta_, constants_);
    case EstimatorKind::ExactMeanOracle:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "ExactMeanOracle does not estimate from data");
}

double ScalarEstimatorSpec::true_mean(FunctionId id) const {
  if (kind_ != EstimatorKind::ExactMeanOracle) {
    throw Error(ErrorCode::InvalidArgument, "true_mean is only defined for ExactMeanOracle");
  }
  return true_mean_(id);
}

}  // namespace chainmean
