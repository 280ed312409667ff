#include "chainmean/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <unordered_map>

namespace chainmean {

AdmissibleSequence::AdmissibleSequence(std::size_t class_size, std::vector<AdmissibleLevel> levels)
    : class_size_(class_size), levels_(std::move(levels)) {
  if (class_size_ == 0) throw Error(ErrorCode::InvalidArgument, "empty class");
  if (levels_.empty()) throw Error(ErrorCode::InvalidArgument, "sequence needs level 0");
  for (std::size_t s = 0; s < levels_.size(); ++s) {
    const auto& lv = levels_[s];
    if (lv.centers.empty() || lv.centers.size() > std::min(class_size_, level_budget(s))) {
      throw Error(ErrorCode::InvalidArgument,
                  "level " + std::to_string(s) + " violates |T_s| <= 2^(2^s)");
    }
    if (lv.assignment.size() != class_size_) {
      throw Error(ErrorCode::InvalidArgument, "assignment must cover the class");
    }
    if (!saturation_ && lv.centers.size() == class_size_) saturation_ = s;
  }
}

FunctionId AdmissibleSequence::project(std::size_t s, FunctionId f) const {
  if (f >= class_size_) throw Error(ErrorCode::UnknownIdentifier, "id " + std::to_string(f));
  if (saturation_ && s >= *saturation_) return f;
  if (s >= levels_.size()) {
    throw Error(ErrorCode::ScheduleMismatch,
                "sequence has no level " + std::to_string(s) + " and is not saturated");
  }
  return levels_[s].assignment[f];
}

std::size_t level_budget(std::size_t s) noexcept {
  if (s == 0) return 1;  // |T_0| = 1
  if (s >= 6) return std::numeric_limits<std::size_t>::max();
  return std::size_t{1} << (std::size_t{1} << s);
}

namespace {

FunctionId one_center(std::size_t n, const DistanceOracle& oracle,
                      const SequenceBuildOptions& options) {
  FunctionId best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  if (n <= options.exhaustive_center_limit) {
    for (FunctionId f = 0; f < n; ++f) {
      double radius = 0.0;
      for (FunctionId h = 0; h < n && radius < best_score; ++h) radius = std::max(radius, oracle(f, h));
      if (radius < best_score) {
        best_score = radius;
        best = f;
      }
    }
    return best;
  }
  // rho-median against an evenly strided subsample.
  const std::size_t m = std::min(n, options.median_subsample);
  std::vector<FunctionId> probe(m);
  for (std::size_t i = 0; i < m; ++i) probe[i] = i * n / m;
  for (FunctionId f = 0; f < n; ++f) {
    double total = 0.0;
    for (const FunctionId h : probe) total += oracle(f, h);
    if (total < best_score) {
      best_score = total;
      best = f;
    }
  }
  return best;
}

}  // namespace

AdmissibleSequence build_admissible_sequence(const FunctionClass& cls, const DistanceOracle& oracle,
                                             std::size_t s_max,
                                             const SequenceBuildOptions& options) {
  const std::size_t n = cls.size();
  if (oracle.class_size() != n) {
    throw Error(ErrorCode::InvalidArgument, "distance oracle was built for another class");
  }

  std::vector<FunctionId> centers;
  std::vector<char> is_center(n, 0);
  std::vector<double> dist(n);
  std::vector<FunctionId> assign(n);

  const FunctionId seed = one_center(n, oracle, options);
  centers.push_back(seed);
  is_center[seed] = 1;
  for (FunctionId f = 0; f < n; ++f) {
    dist[f] = f == seed ? 0.0 : oracle(f, seed);
    assign[f] = seed;
  }

  std::vector<AdmissibleLevel> levels;
  for (std::size_t s = 0; s <= s_max; ++s) {
    const std::size_t target = std::min(n, level_budget(s));
    while (centers.size() < target) {
      FunctionId far = n;
      for (FunctionId f = 0; f < n; ++f) {
        if (!is_center[f] && (far == n || dist[f] > dist[far])) far = f;
      }
      centers.push_back(far);
      is_center[far] = 1;
      dist[far] = 0.0;
      assign[far] = far;
      for (FunctionId f = 0; f < n; ++f) {
        if (is_center[f]) continue;
        const double d = oracle(f, far);
        if (d < dist[f] || (d == dist[f] && far < assign[f])) {
          dist[f] = d;
          assign[f] = far;
        }
      }
    }
    levels.push_back({centers, assign});
    if (centers.size() == n) break;
  }
  return AdmissibleSequence(n, std::move(levels));
}

double chaining_functional(const AdmissibleSequence& seq, const DistanceOracle& oracle) {
  double best = 0.0;
  for (FunctionId f = 0; f < seq.class_size(); ++f) {
    double total = 0.0;
    for (std::size_t s = 0; s < seq.num_levels(); ++s) {
      const FunctionId c = seq.level(s).assignment[f];
      if (c != f) total += std::sqrt(std::ldexp(1.0, static_cast<int>(s))) * oracle(f, c);
    }
    best = std::max(best, total);
  }
  return best;
}

std::size_t deepest_level(std::size_t n, const ScheduleConstants& constants) {
  const double top = constants.c1 * static_cast<double>(n);
  std::size_t s = 0;
  while (std::ldexp(1.0, static_cast<int>(s) + 1) <= top) ++s;
  return s;
}

LevelSchedule level_schedule(std::size_t n, double delta, double eta, const AdmissibleSequence& seq,
                             const ScheduleConstants& constants) {
  if (n < 8) throw Error(ErrorCode::SampleTooSmall, "need N >= 8");
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1]");
  }
  const double nd = static_cast<double>(n);
  if (!(delta > 0.0 && delta <= 0.5) ||
      (constants.enforce_delta_floor && delta < std::exp(-constants.c1 * nd))) {
    throw Error(ErrorCode::ConfidenceOutOfRange,
                "delta must lie in [exp(-c1 N), 1/2]; got " + std::to_string(delta));
  }
  const double top = constants.c1 * nd;
  if (top < 1.0) {
    throw Error(ErrorCode::SampleTooSmall,
                "N = " + std::to_string(n) + " is below 1/c1; no chaining level fits");
  }
  int s1 = 0;
  while (std::ldexp(1.0, s1 + 1) <= top) ++s1;
  if (const auto sat = seq.saturation_level()) s1 = std::min(s1, static_cast<int>(*sat));

  const double target = std::max({1.0, std::log(1.0 / delta), eta * nd}) * (1.0 - 1e-12);
  int s0 = 0;
  while (std::ldexp(1.0, s0) < target) ++s0;

  LevelSchedule schedule;
  schedule.n = n;
  schedule.delta = delta;
  schedule.eta = eta;
  schedule.s1 = s1;
  schedule.s0 = std::min(s0, s1);
  schedule.trivial_case = eta >= constants.c0_trivial;
  schedule.constants = constants;
  return schedule;
}

namespace {

UniformEstimate run_chain(const Sample& sample, const FunctionClass& cls, const TransformPair& u,
                          const AdmissibleSequence& seq, const LevelSchedule& schedule,
                          const ScalarEstimatorSpec& est) {
  const std::size_t n_funcs = cls.size();
  if (seq.class_size() != n_funcs) {
    throw Error(ErrorCode::ScheduleMismatch, "sequence was built for another class");
  }
  if (schedule.trivial_case) {
    throw Error(ErrorCode::ScheduleMismatch, "trivial-regime schedule; use the corrupted estimator");
  }
  if (est.eta() != schedule.eta) {
    throw Error(ErrorCode::ScheduleMismatch, "estimator eta differs from the schedule's eta");
  }
  const int s0 = schedule.s0;
  const int s1 = schedule.s1;
  if (s0 < 0 || s0 > s1 || !seq.covers(static_cast<std::size_t>(s1))) {
    throw Error(ErrorCode::ScheduleMismatch,
                "sequence does not reach level s1 = " + std::to_string(s1));
  }
  if (est.is_robust() && sample.size() != schedule.n) {
    throw Error(ErrorCode::ScheduleMismatch, "schedule was computed for a different N");
  }

  // Every function that appears as pi_s f for s in [s0, s1].
  std::vector<long> column(n_funcs, -1);
  std::vector<FunctionId> needed;
  for (FunctionId f = 0; f < n_funcs; ++f) {
    for (int s = s0; s <= s1; ++s) {
      const FunctionId c = seq.project(static_cast<std::size_t>(s), f);
      if (column[c] < 0) {
        column[c] = static_cast<long>(needed.size());
        needed.push_back(c);
      }
    }
  }

  Matrix transformed;
  if (est.is_robust()) {
    transformed = cls.evaluate_on(sample, needed);
    u.apply_u(transformed);
  }
  const auto n_points = static_cast<std::size_t>(transformed.rows());
  auto col = [&](FunctionId id) {
    return std::span<const double>(transformed.col(column[id]).data(), n_points);
  };

  UniformEstimate out;
  out.schedule = schedule;
  out.values.assign(n_funcs, 0.0);
  out.base.assign(n_funcs, 0.0);
  out.per_level.assign(n_funcs, std::vector<double>(static_cast<std::size_t>(s1 - s0), 0.0));

  std::unordered_map<FunctionId, double> base_cache;
  const Confidence base_conf = schedule.level_confidence(s0);
  for (FunctionId f = 0; f < n_funcs; ++f) {
    const FunctionId c = seq.project(static_cast<std::size_t>(s0), f);
    auto it = base_cache.find(c);
    if (it == base_cache.end()) {
      const double v = est.is_robust() ? est.estimate(col(c), base_conf) : est.true_mean(c);
      it = base_cache.emplace(c, v).first;
    }
    out.base[f] = it->second;
  }

  // Increment estimates are shared by every f with the same (pi_{s+1} f, pi_s f).
  std::map<std::tuple<int, FunctionId, FunctionId>, double> increments;
  std::vector<double> scratch(n_points);
  for (int s = s0; s < s1; ++s) {
    const Confidence conf = schedule.level_confidence(s);
    for (FunctionId f = 0; f < n_funcs; ++f) {
      const FunctionId upper = seq.project(static_cast<std::size_t>(s + 1), f);
      const FunctionId lower = seq.project(static_cast<std::size_t>(s), f);
      if (upper == lower) continue;  // zero increment, every estimator returns 0
      const auto key = std::make_tuple(s, upper, lower);
      auto it = increments.find(key);
      if (it == increments.end()) {
        double v;
        if (est.is_robust()) {
          const auto a = col(upper);
          const auto b = col(lower);
          for (std::size_t i = 0; i < n_points; ++i) scratch[i] = a[i] - b[i];
          v = est.estimate(scratch, conf);
        } else {
          v = est.true_mean(upper) - est.true_mean(lower);
        }
        it = increments.emplace(key, v).first;
      }
      out.per_level[f][static_cast<std::size_t>(s - s0)] = it->second;
    }
  }
  out.distinct_increments = increments.size();

  for (FunctionId f = 0; f < n_funcs; ++f) {
    double total = out.base[f];
    for (const double inc : out.per_level[f]) total += inc;
    out.values[f] = total;
  }
  return out;
}

}  // namespace

UniformEstimate estimate_uniform(const Sample& sample, const FunctionClass& cls,
                                 const TransformPair& u, const AdmissibleSequence& seq,
                                 const LevelSchedule& schedule, const ScalarEstimatorSpec& est) {
  return run_chain(sample, cls, u, seq, schedule, est);
}

UniformEstimate estimate_uniform_corrupted(const Sample& sample, const FunctionClass& cls,
                                           const TransformPair& u, const AdmissibleSequence& seq,
                                           const LevelSchedule& schedule,
                                           const ScalarEstimatorSpec& est) {
  if (!est.is_robust()) {
    throw Error(ErrorCode::InvalidArgument, "the corrupted estimator needs a robust scalar estimator");
  }
  if (schedule.trivial_case) {
    UniformEstimate out;
    out.schedule = schedule;
    out.trivial = true;
    out.values.assign(cls.size(), 0.0);
    out.base.assign(cls.size(), 0.0);
    out.per_level.assign(cls.size(), {});
    return out;
  }
  return run_chain(sample, cls, u, seq, schedule, est);
}

nlohmann::json sequence_to_json(const AdmissibleSequence& seq, const FunctionClass& cls) {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t s = 0; s < seq.num_levels(); ++s) {
    const auto& lv = seq.level(s);
    nlohmann::json centers = nlohmann::json::array();
    for (const FunctionId c : lv.centers) centers.push_back(cls.name(c));
    nlohmann::json assignment = nlohmann::json::object();
    for (FunctionId f = 0; f < seq.class_size(); ++f) assignment[cls.name(f)] = cls.name(lv.assignment[f]);
    levels.push_back({{"level", s}, {"centers", centers}, {"assignment", assignment}});
  }
  nlohmann::json out = {{"class_size", seq.class_size()}, {"levels", levels}};
  if (const auto sat = seq.saturation_level()) out["saturation_level"] = *sat;
  return out;
}

nlohmann::json estimate_to_json(const UniformEstimate& est, const FunctionClass& cls) {
  nlohmann::json values = nlohmann::json::object();
  nlohmann::json base = nlohmann::json::object();
  nlohmann::json per_level = nlohmann::json::object();
  for (FunctionId f = 0; f < est.values.size(); ++f) {
    values[cls.name(f)] = est.values[f];
    base[cls.name(f)] = est.base[f];
    per_level[cls.name(f)] = est.per_level[f];
  }
  const auto& sc = est.schedule;
  return {{"values", values},
          {"base", base},
          {"per_level", per_level},
          {"trivial", est.trivial},
          {"schedule",
           {{"n", sc.n}, {"delta", sc.delta}, {"eta", sc.eta}, {"s0", sc.s0}, {"s1", sc.s1},
            {"trivial_case", sc.trivial_case}, {"c1", sc.constants.c1},
            {"c0_trivial", sc.constants.c0_trivial}}}};
}

}  // namespace chainmean
