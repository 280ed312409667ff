#include "chainmean/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "chainmean/gaussian_width.hpp"
#include "chainmean/rng.hpp"

namespace chainmean {

void DistributionSpec::validate() const {
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "distribution dimension must be >= 1");
  switch (kind) {
    case Kind::StudentT:
      if (!(nu > 4.0)) throw Error(ErrorCode::BadNu, "Student-t needs nu > 4, got " + std::to_string(nu));
      break;
    case Kind::SymmetricPareto:
      if (!(alpha > 4.0)) {
        throw Error(ErrorCode::BadAlpha, "symmetric Pareto needs alpha > 4, got " + std::to_string(alpha));
      }
      break;
    case Kind::Gaussian:
      if (covariance.size() != 0 &&
          (covariance.rows() != static_cast<Eigen::Index>(d) || covariance.cols() != covariance.rows())) {
        throw Error(ErrorCode::NotSquare, "Gaussian covariance must be d x d");
      }
      break;
    case Kind::ProductExponential:
      break;
  }
  if (kind != Kind::Gaussian && !(scale > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  }
}

Matrix DistributionSpec::second_moment() const {
  const auto dim = static_cast<Eigen::Index>(d);
  switch (kind) {
    case Kind::Gaussian:
      return covariance.size() == 0 ? Matrix(Matrix::Identity(dim, dim)) : covariance;
    case Kind::StudentT:
      return Matrix::Identity(dim, dim) * (scale * scale * nu / (nu - 2.0));
    case Kind::SymmetricPareto:
      return Matrix::Identity(dim, dim) * (scale * scale * alpha / (alpha - 2.0));
    case Kind::ProductExponential:
      return Matrix::Identity(dim, dim) * (scale * scale);
  }
  return {};
}

Sample generate_sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw Error(ErrorCode::EmptySample, "N must be >= 1");
  Rng rng(derive_seed(seed, 0));
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(spec.d);
  Matrix x(rows, cols);
  using Kind = DistributionSpec::Kind;
  switch (spec.kind) {
    case Kind::Gaussian: {
      std::normal_distribution<double> normal;
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal(rng);
      if (spec.covariance.size() != 0) x = x * psd_sqrt(spec.covariance);
      break;
    }
    case Kind::StudentT: {
      std::student_t_distribution<double> t(spec.nu);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = spec.scale * t(rng);
      break;
    }
    case Kind::SymmetricPareto: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      std::bernoulli_distribution sign;
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double mag = spec.scale * std::pow(1.0 - unif(rng), -1.0 / spec.alpha);
          x(i, j) = sign(rng) ? mag : -mag;
        }
      }
      break;
    }
    case Kind::ProductExponential: {
      std::exponential_distribution<double> e(1.0);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = spec.scale * (e(rng) - 1.0);
      break;
    }
  }
  return Sample(std::move(x));
}

std::size_t CorruptionModel::budget(std::size_t n) const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "eta must lie in [0, 1]");
  if (kind == Kind::None) return 0;
  const auto b = static_cast<std::size_t>(std::floor(eta * static_cast<double>(n) + 1e-9));
  return std::min(b, n);
}

namespace {

std::vector<std::size_t> draw_rows(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Vector random_unit(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

Sample corrupt(const Sample& sample, const CorruptionModel& model, std::uint64_t seed) {
  const std::size_t n = sample.size();
  const std::size_t count = model.budget(n);
  if (count == 0) return sample;
  Matrix x = sample.points();
  const auto d = static_cast<Eigen::Index>(sample.dim());
  Rng rng(derive_seed(seed, 1));
  using Kind = CorruptionModel::Kind;
  switch (model.kind) {
    case Kind::None:
      break;
    case Kind::SpikeReplace: {
      Vector fixed = Vector::Zero(d);
      if (model.direction.size() == 0) {
        fixed(0) = 1.0;
      } else if (model.direction.size() == d) {
        fixed = model.direction;
      } else {
        throw Error(ErrorCode::InvalidArgument, "spike direction dimension mismatch");
      }
      for (const std::size_t i : draw_rows(n, count, rng)) {
        const Vector dir = model.random_direction ? random_unit(sample.dim(), rng) : fixed;
        x.row(static_cast<Eigen::Index>(i)) = model.magnitude * dir.transpose();
      }
      break;
    }
    case Kind::SignFlipLargest: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      const Vector norms = x.rowwise().norm();
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return norms(static_cast<Eigen::Index>(a)) > norms(static_cast<Eigen::Index>(b));
      });
      for (std::size_t k = 0; k < count; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        x.row(i) *= -model.magnitude;
      }
      break;
    }
    case Kind::AdaptiveWorstDirection: {
      const Matrix& clean = sample.points();
      const Eigen::RowVectorXd mean = clean.colwise().mean();
      const Matrix centred = clean.rowwise() - mean;
      const Matrix cov = centred.transpose() * centred / static_cast<double>(n);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
      Vector top = eig.eigenvectors().col(d - 1);
      Eigen::Index arg = 0;
      top.cwiseAbs().maxCoeff(&arg);
      if (top(arg) < 0.0) top = -top;
      for (const std::size_t i : draw_rows(n, count, rng)) {
        x.row(static_cast<Eigen::Index>(i)) = model.magnitude * top.transpose();
      }
      break;
    }
  }
  return Sample(std::move(x));
}

Matrix random_sphere_directions(std::size_t count, std::size_t d, std::uint64_t seed) {
  if (count == 0 || d == 0) throw Error(ErrorCode::InvalidArgument, "need count, d >= 1");
  Rng rng(derive_seed(seed, 2));
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = random_unit(d, rng).transpose();
  return out;
}

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else {
    out[prefix] = j;
  }
}

DistributionSpec::Kind parse_distribution(const std::string& s) {
  using Kind = DistributionSpec::Kind;
  if (s == "gaussian") return Kind::Gaussian;
  if (s == "student_t") return Kind::StudentT;
  if (s == "symmetric_pareto") return Kind::SymmetricPareto;
  if (s == "product_exponential") return Kind::ProductExponential;
  throw Error(ErrorCode::InvalidArgument, "unknown distribution.kind '" + s + "'");
}

CorruptionModel::Kind parse_corruption(const std::string& s) {
  using Kind = CorruptionModel::Kind;
  if (s == "none") return Kind::None;
  if (s == "spike_replace") return Kind::SpikeReplace;
  if (s == "sign_flip_largest") return Kind::SignFlipLargest;
  if (s == "adaptive_worst_direction") return Kind::AdaptiveWorstDirection;
  throw Error(ErrorCode::InvalidArgument, "unknown corruption.kind '" + s + "'");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  std::map<std::string, nlohmann::json> kv;
  flatten(j, "", kv);

  ExperimentConfig c;
  std::string u_kind = "square";
  double u_p = 2.0;
  std::vector<double> cov_diag;
  try {
    for (const auto& [key, value] : kv) {
      if (key == "distribution.kind") c.distribution.kind = parse_distribution(value.get<std::string>());
      else if (key == "distribution.d") c.distribution.d = value.get<std::size_t>();
      else if (key == "distribution.nu") c.distribution.nu = value.get<double>();
      else if (key == "distribution.alpha") c.distribution.alpha = value.get<double>();
      else if (key == "distribution.scale") c.distribution.scale = value.get<double>();
      else if (key == "distribution.covariance_diag") cov_diag = value.get<std::vector<double>>();
      else if (key == "corruption.kind") c.corruption.kind = parse_corruption(value.get<std::string>());
      else if (key == "corruption.eta") c.corruption.eta = value.get<double>();
      else if (key == "corruption.magnitude") c.corruption.magnitude = value.get<double>();
      else if (key == "corruption.random_direction") c.corruption.random_direction = value.get<bool>();
      else if (key == "class.directions_csv") c.directions_csv = value.get<std::string>();
      else if (key == "class.random_sphere_count") c.random_sphere_count = value.get<std::size_t>();
      else if (key == "u.kind") u_kind = value.get<std::string>();
      else if (key == "u.p") u_p = value.get<double>();
      else if (key == "n") c.n = value.get<std::size_t>();
      else if (key == "delta") c.delta = value.get<double>();
      else if (key == "trials") c.trials = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "estimator") {
        const auto e = value.get<std::string>();
        if (e == "mom") c.estimator = EstimatorKind::MedianOfMeans;
        else if (e == "trimmed") c.estimator = EstimatorKind::TrimmedMean;
        else throw Error(ErrorCode::InvalidArgument, "estimator must be mom or trimmed");
      }
      else if (key == "width_draws") c.width_draws = value.get<std::size_t>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else if (key == "record_timing") c.record_timing = value.get<bool>();
      else if (key == "output.format") c.output_format = value.get<std::string>();
      else if (key == "output.path") c.output_path = value.get<std::string>();
      else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config value has the wrong type: ") + e.what());
  }

  if (u_kind == "square") c.u = TransformPair::square();
  else if (u_kind == "abs_power") c.u = TransformPair::abs_power(u_p);
  else if (u_kind == "identity") c.u = TransformPair::identity();
  else throw Error(ErrorCode::InvalidArgument, "unknown u.kind '" + u_kind + "'");

  if (!cov_diag.empty()) {
    if (cov_diag.size() != c.distribution.d) {
      throw Error(ErrorCode::InvalidArgument, "distribution.covariance_diag needs d entries");
    }
    c.distribution.covariance = Eigen::Map<const Vector>(cov_diag.data(), static_cast<Eigen::Index>(cov_diag.size())).asDiagonal();
  }
  if (c.output_format != "csv" && c.output_format != "json") {
    throw Error(ErrorCode::InvalidArgument, "output.format must be csv or json");
  }
  if (!(c.delta > 0.0 && c.delta <= 0.5)) {
    throw Error(ErrorCode::BadConfidence, "delta must lie in (0, 1/2]");
  }
  if (!(c.corruption.eta >= 0.0 && c.corruption.eta <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "corruption.eta must lie in [0, 1]");
  }
  if (c.n == 0 || c.trials == 0) throw Error(ErrorCode::InvalidArgument, "n and trials must be >= 1");
  c.distribution.validate();
  return c;
}

TrueMeanReference true_means(const DistributionSpec& spec, const Matrix& directions,
                             const TransformPair& u) {
  spec.validate();
  const auto m = static_cast<std::size_t>(directions.rows());
  TrueMeanReference ref;
  ref.values.assign(m, 0.0);
  ref.std_errors.assign(m, 0.0);
  const Matrix second = spec.second_moment();
  using Kind = TransformPair::Kind;

  if (u.kind() == Kind::Custom) {
    throw Error(ErrorCode::TrueMeanUnavailable, "no reference for a custom transform");
  }
  if (u.kind() == Kind::Identity) return ref;  // every distribution is centred
  if (u.kind() == Kind::Square) {
    for (std::size_t i = 0; i < m; ++i) {
      const Vector t = directions.row(static_cast<Eigen::Index>(i)).transpose();
      ref.values[i] = t.dot(second * t);
    }
    return ref;
  }
  if (spec.kind == DistributionSpec::Kind::Gaussian) {
    const double p = u.p();
    const double abs_moment = std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) / std::sqrt(M_PI);
    for (std::size_t i = 0; i < m; ++i) {
      const Vector t = directions.row(static_cast<Eigen::Index>(i)).transpose();
      ref.values[i] = std::pow(t.dot(second * t), p / 2.0) * abs_moment;
    }
    return ref;
  }

  // Monte Carlo reference with its own fixed seed.
  ref.analytic = false;
  ref.draws = kReferenceDraws;
  ref.seed = kReferenceSeed;
  constexpr std::size_t kChunk = 10000;
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(m));
  Vector sumsq = Vector::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t chunk = 0; chunk * kChunk < kReferenceDraws; ++chunk) {
    const Sample x = generate_sample(spec, kChunk, derive_seed(kReferenceSeed, chunk));
    Matrix vals = x.points() * directions.transpose();
    u.apply_u(vals);
    sum += vals.colwise().sum().transpose();
    sumsq += vals.array().square().colwise().sum().matrix().transpose();
  }
  const double n = static_cast<double>(kReferenceDraws);
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double mean = sum(k) / n;
    const double var = std::max(0.0, sumsq(k) / n - mean * mean) * n / (n - 1.0);
    ref.values[i] = mean;
    ref.std_errors[i] = std::sqrt(var / n);
  }
  return ref;
}

Matrix experiment_directions(const ExperimentConfig& config) {
  if (config.directions.size() != 0) return config.directions;
  if (config.directions_csv) return read_matrix_csv(*config.directions_csv);
  if (config.random_sphere_count > 0) {
    return random_sphere_directions(config.random_sphere_count, config.distribution.d,
                                    derive_seed(config.seed, 0xd1ec7));
  }
  throw Error(ErrorCode::InvalidArgument, "class needs directions_csv or random_sphere_count");
}

std::vector<ResultRecord> run_experiment(const ExperimentConfig& config) {
  config.distribution.validate();
  if (config.trials == 0) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  const Matrix directions = experiment_directions(config);
  if (directions.cols() != static_cast<Eigen::Index>(config.distribution.d)) {
    throw Error(ErrorCode::InvalidArgument, "directions do not match distribution.d");
  }
  const FunctionClass cls = FunctionClass::linear(directions);
  const TrueMeanReference ref = true_means(config.distribution, directions, config.u);
  const WidthEstimate width = gaussian_sup(cls, config.distribution.second_moment(),
                                           config.width_draws, derive_seed(config.seed, 0x3d7));
  const double eta = config.corruption.kind == CorruptionModel::Kind::None ? 0.0 : config.corruption.eta;

  std::vector<FunctionId> all(cls.size());
  std::iota(all.begin(), all.end(), FunctionId{0});

  std::vector<ResultRecord> records(config.trials);
  auto run_trial = [&](std::size_t t) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t trial_seed = derive_seed(config.seed, 1000 + t);
    const Sample clean = generate_sample(config.distribution, config.n, derive_seed(trial_seed, 0));
    const Sample data = corrupt(clean, config.corruption, derive_seed(trial_seed, 1));
    const Sample aux = generate_sample(config.distribution, config.n, derive_seed(trial_seed, 2));

    const DistanceOracle oracle = DistanceOracle::empirical(cls, aux);
    const AdmissibleSequence seq =
        build_admissible_sequence(cls, oracle, deepest_level(config.n, config.schedule_constants));
    const LevelSchedule schedule =
        level_schedule(config.n, config.delta, eta, seq, config.schedule_constants);
    const ScalarEstimatorSpec est =
        config.estimator == EstimatorKind::TrimmedMean
            ? ScalarEstimatorSpec::trimmed_mean(config.delta, eta, config.block_constants)
            : ScalarEstimatorSpec::median_of_means(config.delta, eta, config.block_constants);
    const UniformEstimate psi = estimate_uniform_corrupted(data, cls, config.u, seq, schedule, est);

    Matrix transformed = cls.evaluate_on(data, all);
    config.u.apply_u(transformed);
    const Vector empirical = transformed.colwise().mean().transpose();

    ResultRecord r;
    r.trial = t;
    r.seed = trial_seed;
    r.n = config.n;
    r.d = config.distribution.d;
    r.eta = eta;
    r.delta = config.delta;
    for (FunctionId f = 0; f < cls.size(); ++f) {
      r.psi_sup_err = std::max(r.psi_sup_err, std::abs(psi.values[f] - ref.values[f]));
      r.emp_sup_err = std::max(r.emp_sup_err, std::abs(empirical(static_cast<Eigen::Index>(f)) - ref.values[f]));
    }
    r.s0 = schedule.s0;
    r.s1 = schedule.s1;
    r.width_mean = width.mean;
    if (config.record_timing) {
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    records[t] = r;
  };

  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, config.trials);
  if (workers == 1) {
    for (std::size_t t = 0; t < config.trials; ++t) run_trial(t);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.trials);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < config.trials; t = next++) {
        try {
          run_trial(t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

namespace {

constexpr const char* kColumns[] = {"trial", "seed",        "N",           "d",  "eta",
                                    "delta", "psi_sup_err", "emp_sup_err", "s0", "s1",
                                    "width_mean", "wall_ms"};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<ResultRecord>& records) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kColumns); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.d) + ',' + fmt_double(r.eta) + ',' + fmt_double(r.delta) + ',' +
           fmt_double(r.psi_sup_err) + ',' + fmt_double(r.emp_sup_err) + ',' + std::to_string(r.s0) +
           ',' + std::to_string(r.s1) + ',' + fmt_double(r.width_mean) + ',' + fmt_double(r.wall_ms) +
           '\n';
  }
  return out;
}

nlohmann::json records_to_json(const std::vector<ResultRecord>& records) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json o;
    out.push_back({{"trial", r.trial},
                   {"seed", r.seed},
                   {"N", r.n},
                   {"d", r.d},
                   {"eta", r.eta},
                   {"delta", r.delta},
                   {"psi_sup_err", r.psi_sup_err},
                   {"emp_sup_err", r.emp_sup_err},
                   {"s0", r.s0},
                   {"s1", r.s1},
                   {"width_mean", r.width_mean},
                   {"wall_ms", r.wall_ms}});
  }
  return out;
}

std::vector<ResultRecord> records_from_json(const nlohmann::json& j) {
  std::vector<ResultRecord> out;
  for (const auto& o : j) {
    ResultRecord r;
    r.trial = o.at("trial").get<std::size_t>();
    r.seed = o.at("seed").get<std::uint64_t>();
    r.n = o.at("N").get<std::size_t>();
    r.d = o.at("d").get<std::size_t>();
    r.eta = o.at("eta").get<double>();
    r.delta = o.at("delta").get<double>();
    r.psi_sup_err = o.at("psi_sup_err").get<double>();
    r.emp_sup_err = o.at("emp_sup_err").get<double>();
    r.s0 = o.at("s0").get<int>();
    r.s1 = o.at("s1").get<int>();
    r.width_mean = o.at("width_mean").get<double>();
    r.wall_ms = o.at("wall_ms").get<double>();
    out.push_back(r);
  }
  return out;
}

void emit(const std::vector<ResultRecord>& records, OutputFormat format,
          const std::filesystem::path& path) {
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to emit");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (format == OutputFormat::Csv) {
    out << records_to_csv(records);
  } else {
    // Keys in column order.
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& o : records_to_json(records)) {
      nlohmann::ordered_json row;
      for (const char* key : kColumns) row[key] = o.at(key);
      arr.push_back(row);
    }
    out << arr.dump(2) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace chainmean
