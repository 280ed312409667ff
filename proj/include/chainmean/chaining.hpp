#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainmean/function_class.hpp"
#include "chainmean/scalar_est.hpp"

namespace chainmean {

struct AdmissibleLevel {
  std::vector<FunctionId> centers;     // T_s, in selection order
  std::vector<FunctionId> assignment;  // pi_s(f) for every f in the class
};

// Center sets T_0, T_1, ... with |T_0| = 1 and |T_s| <= 2^(2^s), plus the
// nearest-center maps pi_s. Levels past the last stored one are either
// identical to the class (once saturated) or unavailable.
class AdmissibleSequence {
 public:
  AdmissibleSequence(std::size_t class_size, std::vector<AdmissibleLevel> levels);

  std::size_t class_size() const noexcept { return class_size_; }
  std::size_t num_levels() const noexcept { return levels_.size(); }
  const AdmissibleLevel& level(std::size_t s) const { return levels_.at(s); }

  // First level whose centers are the whole class, if any is stored.
  std::optional<std::size_t> saturation_level() const noexcept { return saturation_; }

  // True when pi_s is defined, i.e. s is stored or past saturation.
  bool covers(std::size_t s) const noexcept {
    return s < levels_.size() || saturation_.has_value();
  }

  // pi_s(f).
  FunctionId project(std::size_t s, FunctionId f) const;

 private:
  std::size_t class_size_;
  std::vector<AdmissibleLevel> levels_;
  std::optional<std::size_t> saturation_;
};

// Cardinality budget: 1 at level 0, else 2^(2^s) saturating at SIZE_MAX.
std::size_t level_budget(std::size_t s) noexcept;

struct SequenceBuildOptions {
  std::size_t exhaustive_center_limit = 4096;  // exact 1-center up to this |F|
  std::size_t median_subsample = 512;          // subsample for the rho-median seed
};

// Greedy farthest-point selection under rho, seeded by a 1-center. Level s
// keeps the first min(|F|, 2^(2^s)) selected points, so the center sets are
// nested. Assignments are exact nearest centers (ties: the function itself if
// it is a center, else the smallest id). Levels stop at s_max or at
// saturation, whichever comes first.
AdmissibleSequence build_admissible_sequence(const FunctionClass& cls, const DistanceOracle& oracle,
                                             std::size_t s_max,
                                             const SequenceBuildOptions& options = {});

// sup_f sum_s 2^(s/2) rho(f, pi_s f) over the stored levels; an upper bound
// on gamma_2(F, rho) once the sequence is saturated.
double chaining_functional(const AdmissibleSequence& seq, const DistanceOracle& oracle);

struct ScheduleConstants {
  double c1 = 1.0 / 128.0;        // 2^{s1} <= c1 * N
  double c0_trivial = 0.25;       // eta at or above this returns the zero estimate
  bool enforce_delta_floor = true; // reject delta < exp(-c1 * N)
};

struct LevelSchedule {
  std::size_t n = 0;
  double delta = 0.5;
  double eta = 0.0;
  int s0 = 0;
  int s1 = 0;
  bool trivial_case = false;
  ScheduleConstants constants;

  // log(1/delta_s) = 2^(s+4).
  static double level_log_inverse(int s) { return std::ldexp(1.0, s + 4); }
  Confidence level_confidence(int s) const {
    return Confidence::from_log_inverse(level_log_inverse(s));
  }
  // exp(-2^(s+4)); underflows to 0 for s >= 6.
  double delta_s(int s) const { return std::exp(-level_log_inverse(s)); }
};

// floor(log2(c1 * N)), the deepest level a schedule for N can use; 0 when
// c1 * N < 2. Build sequences at least this deep.
std::size_t deepest_level(std::size_t n, const ScheduleConstants& constants = {});

LevelSchedule level_schedule(std::size_t n, double delta, double eta, const AdmissibleSequence& seq,
                             const ScheduleConstants& constants = {});

struct UniformEstimate {
  std::vector<double> values;                 // Psi(f)
  std::vector<double> base;                   // Psi'_{s0}(f)
  std::vector<std::vector<double>> per_level; // per_level[f][s - s0] = Psi_s(f), s in [s0, s1)
  LevelSchedule schedule;
  bool trivial = false;
  std::size_t distinct_increments = 0;        // |H_s| summed over levels
};

// Psi(f) = Psi'_{s0}(f) + sum_{s0 <= s < s1} Psi_s(f), where Psi_s applies
// the scalar estimator at confidence delta_s to u(pi_{s+1} f) - u(pi_s f) and
// Psi'_{s0} applies it to u(pi_{s0} f).
UniformEstimate estimate_uniform(const Sample& sample, const FunctionClass& cls,
                                 const TransformPair& u, const AdmissibleSequence& seq,
                                 const LevelSchedule& schedule, const ScalarEstimatorSpec& est);

// As estimate_uniform with the robust estimator at schedule.eta; returns the
// all-zero estimate in the trivial regime.
UniformEstimate estimate_uniform_corrupted(const Sample& sample, const FunctionClass& cls,
                                           const TransformPair& u, const AdmissibleSequence& seq,
                                           const LevelSchedule& schedule,
                                           const ScalarEstimatorSpec& est);

nlohmann::json sequence_to_json(const AdmissibleSequence& seq, const FunctionClass& cls);
nlohmann::json estimate_to_json(const UniformEstimate& est, const FunctionClass& cls);

}  // namespace chainmean
