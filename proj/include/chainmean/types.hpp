#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

#include "chainmean/error.hpp"

namespace chainmean {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Index of a function inside a FunctionClass.
using FunctionId = std::size_t;

// Stands for the zero function, which every distance oracle must accept.
inline constexpr FunctionId kZeroFunction = std::numeric_limits<FunctionId>::max();

// A confidence level delta in (0, 1/2], stored through log(1/delta).
//
// The per-level ladder exp(-2^{s+4}) underflows a double for s >= 6, so the
// library never materializes delta itself when it does not have to.
class Confidence {
 public:
  static Confidence from_delta(double delta) {
    if (!(delta > 0.0 && delta <= 0.5)) {
      throw Error(ErrorCode::BadConfidence,
                  "delta must lie in (0, 1/2], got " + std::to_string(delta));
    }
    return Confidence(-std::log(delta));
  }

  static Confidence from_log_inverse(double log_inverse) {
    // log(2) itself is the boundary delta = 1/2; allow for rounding.
    if (!(log_inverse >= std::log(2.0) * (1.0 - 1e-15)) || std::isinf(log_inverse)) {
      throw Error(ErrorCode::BadConfidence,
                  "log(1/delta) must be finite and >= log 2, got " + std::to_string(log_inverse));
    }
    return Confidence(log_inverse);
  }

  double log_inverse() const noexcept { return log_inverse_; }
  double delta() const noexcept { return std::exp(-log_inverse_); }

 private:
  explicit Confidence(double log_inverse) : log_inverse_(log_inverse) {}
  double log_inverse_;
};

}  // namespace chainmean
