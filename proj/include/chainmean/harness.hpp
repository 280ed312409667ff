#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainmean/chaining.hpp"
#include "chainmean/function_class.hpp"
#include "chainmean/scalar_est.hpp"

namespace chainmean {

struct DistributionSpec {
  enum class Kind { Gaussian, StudentT, SymmetricPareto, ProductExponential };

  Kind kind = Kind::Gaussian;
  std::size_t d = 1;
  Matrix covariance;  // Gaussian only; empty means identity
  double nu = 5.0;    // StudentT, must exceed 4
  double alpha = 5.0; // SymmetricPareto, must exceed 4
  double scale = 1.0; // non-Gaussian kinds, per coordinate

  void validate() const;
  // E[X X^T]; every kind is centred.
  Matrix second_moment() const;
};

// N i.i.d. rows, deterministic per seed.
Sample generate_sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

struct CorruptionModel {
  enum class Kind { None, SpikeReplace, SignFlipLargest, AdaptiveWorstDirection };

  Kind kind = Kind::None;
  double eta = 0.0;
  double magnitude = 1e3;
  bool random_direction = false;  // SpikeReplace: fresh random unit direction per spike
  Vector direction;               // SpikeReplace fixed direction; empty means e_1

  // floor(eta * N), the exact number of rows an adversary rewrites.
  std::size_t budget(std::size_t n) const;
};

// Rewrites exactly budget(N) rows:
//   SpikeReplace            magnitude * direction at seeded random rows
//   SignFlipLargest         -magnitude * x on the rows of largest norm
//   AdaptiveWorstDirection  magnitude * (top eigenvector of the clean
//                           empirical covariance) at seeded random rows
Sample corrupt(const Sample& sample, const CorruptionModel& model, std::uint64_t seed);

// `count` directions uniform on the unit sphere of R^d, one per row.
Matrix random_sphere_directions(std::size_t count, std::size_t d, std::uint64_t seed);

struct ExperimentConfig {
  DistributionSpec distribution;
  CorruptionModel corruption;
  std::optional<std::filesystem::path> directions_csv;
  std::size_t random_sphere_count = 0;
  Matrix directions;  // takes precedence over the two fields above when non-empty
  TransformPair u = TransformPair::square();
  std::size_t n = 1024;
  double delta = 0.01;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::MedianOfMeans;
  BlockConstants block_constants;
  ScheduleConstants schedule_constants;
  std::size_t width_draws = 10000;
  std::size_t threads = 1;
  bool record_timing = true;
  std::string output_format = "csv";
  std::optional<std::filesystem::path> output_path;
};

// Reads the keys distribution.*, corruption.*, class.*, u.*, n, delta,
// trials, seed, output.*; accepts nested objects or dotted flat keys.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct ResultRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double eta = 0.0;
  double delta = 0.0;
  double psi_sup_err = 0.0;
  double emp_sup_err = 0.0;
  int s0 = 0;
  int s1 = 0;
  double width_mean = 0.0;
  double wall_ms = 0.0;

  bool operator==(const ResultRecord&) const = default;
};

// E u(<X, t>) per direction, analytic when possible, else Monte Carlo.
struct TrueMeanReference {
  std::vector<double> values;
  std::vector<double> std_errors;  // zero for analytic entries
  bool analytic = true;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kReferenceDraws = 1'000'000;
inline constexpr std::uint64_t kReferenceSeed = 0x5eedcafe;

TrueMeanReference true_means(const DistributionSpec& spec, const Matrix& directions,
                             const TransformPair& u);

Matrix experiment_directions(const ExperimentConfig& config);

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config);

enum class OutputFormat { Csv, Json };

std::string records_to_csv(const std::vector<ResultRecord>& records);
nlohmann::json records_to_json(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> records_from_json(const nlohmann::json& j);

void emit(const std::vector<ResultRecord>& records, OutputFormat format,
          const std::filesystem::path& path);

}  // namespace chainmean
