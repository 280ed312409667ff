#pragma once

#include <cstddef>
#include <cstdint>

#include "chainmean/function_class.hpp"

namespace chainmean {

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Monte Carlo estimate of E max_{t in T} <G, t> for G ~ N(0, covariance).
//
// Draws are split into `workers` contiguous chunks, each with its own
// substream derived from the seed; the result depends on (seed, workers) only.
WidthEstimate gaussian_sup(const FunctionClass& cls, const Matrix& covariance, std::size_t draws,
                           std::uint64_t seed, std::size_t workers = 1);

// (width / d_F)^2.
double critical_dimension(const WidthEstimate& width, double d_f);

}  // namespace chainmean
