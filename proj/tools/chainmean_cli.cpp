#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainmean/applications.hpp"
#include "chainmean/chaining.hpp"
#include "chainmean/gaussian_width.hpp"
#include "chainmean/harness.hpp"

using namespace chainmean;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Thrown for anything wrong with flags, config or input files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

// Sets a dotted key, dropping any flat spelling of it so the override wins.
void set_key(json& j, const std::string& dotted, json value) {
  j.erase(dotted);
  json* node = &j;
  std::size_t start = 0;
  for (std::size_t dot; (dot = dotted.find('.', start)) != std::string::npos; start = dot + 1) {
    json& child = (*node)[dotted.substr(start, dot - start)];
    if (!child.is_object()) child = json::object();
    node = &child;
  }
  (*node)[dotted.substr(start)] = std::move(value);
}

template <typename T>
void override_if(json& j, const std::string& key, const std::optional<T>& v) {
  if (v) set_key(j, key, *v);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

UniformFitOptions fit_options(const ExperimentConfig& c, const std::string& prior_csv) {
  UniformFitOptions o;
  o.delta = c.delta;
  o.eta = c.corruption.eta;
  o.estimator = c.estimator;
  o.block_constants = c.block_constants;
  o.schedule_constants = c.schedule_constants;
  if (!prior_csv.empty()) o.prior_covariance = read_matrix_csv(prior_csv);
  return o;
}

// Flags shared by the subcommands that fit Psi on a user sample.
struct FitFlags {
  std::string config;
  std::string sample;
  std::string prior;
  std::optional<double> delta, eta;
  std::optional<std::string> estimator;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON config file");
    cmd->add_option("--sample", sample, "sample CSV, one point per row")->required()->check(CLI::ExistingFile);
    cmd->add_option("--delta", delta, "confidence parameter");
    cmd->add_option("--eta", eta, "corruption fraction");
    cmd->add_option("--estimator", estimator, "mom or trimmed");
    cmd->add_option("--prior-covariance", prior, "CSV matrix used as the exact L2 structure")
        ->check(CLI::ExistingFile);
  }

  json merged() const {
    json j = load_config(config);
    override_if(j, "delta", delta);
    override_if(j, "corruption.eta", eta);
    override_if(j, "estimator", estimator);
    return j;
  }
};

struct Runner {
  // Setup runs first; errors there are config errors. The job's own errors are runtime errors.
  template <typename Setup>
  int operator()(Setup&& setup) const {
    std::function<void()> job;
    try {
      job = setup();
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const Error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const json::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    }
    try {
      job();
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chaining-based uniform mean estimation"};
  app.require_subcommand(1);

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "run Psi over a linear class on a CSV sample");
  FitFlags est_flags;
  est_flags.attach(est_cmd);
  std::string est_dirs, est_out, dump_seq, dump_est;
  std::optional<std::string> est_u;
  std::optional<double> est_p;
  est_cmd->add_option("--directions", est_dirs, "directions CSV, one per row")->check(CLI::ExistingFile);
  est_cmd->add_option("--u", est_u, "square, abs_power or identity");
  est_cmd->add_option("--p", est_p, "exponent for abs_power");
  est_cmd->add_option("--output", est_out, "CSV of function,value (default stdout)");
  est_cmd->add_option("--dump-sequence", dump_seq, "write the admissible sequence as JSON");
  est_cmd->add_option("--dump-estimates", dump_est, "write values, base and level pieces as JSON");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a seeded experiment and emit per-trial records");
  std::string sim_config;
  std::uint64_t sim_seed = 0;
  std::optional<std::size_t> sim_trials, sim_n, sim_threads, sim_draws;
  std::optional<double> sim_delta, sim_eta;
  std::optional<std::string> sim_out, sim_format;
  bool no_timing = false;
  sim_cmd->add_option("--config", sim_config, "JSON config file");
  sim_cmd->add_option("--seed", sim_seed, "master seed")->required();
  sim_cmd->add_option("--trials", sim_trials);
  sim_cmd->add_option("--n", sim_n, "sample size");
  sim_cmd->add_option("--delta", sim_delta);
  sim_cmd->add_option("--eta", sim_eta);
  sim_cmd->add_option("--threads", sim_threads);
  sim_cmd->add_option("--draws", sim_draws, "Monte Carlo draws for the width column");
  sim_cmd->add_option("--output", sim_out, "output path (default stdout)");
  sim_cmd->add_option("--format", sim_format, "csv or json");
  sim_cmd->add_flag("--no-timing", no_timing, "write wall_ms as 0 for byte-identical reruns");

  // covariance
  auto* cov_cmd = app.add_subcommand("covariance", "robust covariance estimate of a CSV sample");
  FitFlags cov_flags;
  cov_flags.attach(cov_cmd);
  std::string cov_out, cov_diag;
  cov_cmd->add_option("--output", cov_out, "matrix CSV")->required();
  cov_cmd->add_option("--diagnostics", cov_diag, "diagnostics JSON (default: output with .json)");

  // lpball
  auto* lp_cmd = app.add_subcommand("lpball", "L_p ball membership of query vectors");
  FitFlags lp_flags;
  lp_flags.attach(lp_cmd);
  std::string lp_dirs, lp_queries, lp_out;
  double lp_p = 2.0, lp_eps = 0.0;
  lp_cmd->add_option("--directions", lp_dirs, "unit directions CSV")->required()->check(CLI::ExistingFile);
  lp_cmd->add_option("--queries", lp_queries, "query vectors CSV")->required()->check(CLI::ExistingFile);
  lp_cmd->add_option("--p", lp_p, "exponent, at least 2");
  lp_cmd->add_option("--epsilon", lp_eps, "target accuracy, reported only");
  lp_cmd->add_option("--output", lp_out, "boolean column CSV (default stdout)");

  // width
  auto* w_cmd = app.add_subcommand("width", "Monte Carlo Gaussian width of a direction set");
  std::string w_config, w_dirs, w_cov, w_out;
  std::size_t w_draws = 10000, w_workers = 1;
  std::uint64_t w_seed = 0;
  w_cmd->add_option("--config", w_config, "JSON config (class.* and distribution.*)");
  w_cmd->add_option("--directions", w_dirs, "directions CSV")->check(CLI::ExistingFile);
  w_cmd->add_option("--covariance", w_cov, "covariance CSV (default identity)")->check(CLI::ExistingFile);
  w_cmd->add_option("--draws", w_draws, "Monte Carlo draws");
  w_cmd->add_option("--seed", w_seed, "seed");
  w_cmd->add_option("--workers", w_workers, "substreams");
  w_cmd->add_option("--output", w_out, "JSON output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const Runner run;

  if (*est_cmd) {
    return run([&]() -> std::function<void()> {
      json j = est_flags.merged();
      override_if(j, "u.kind", est_u);
      override_if(j, "u.p", est_p);
      if (!est_dirs.empty()) set_key(j, "class.directions_csv", est_dirs);
      const ExperimentConfig c = experiment_config_from_json(j);
      auto sample = std::make_shared<Sample>(read_sample_csv(est_flags.sample));
      auto dirs = std::make_shared<Matrix>(experiment_directions(c));
      if (dirs->cols() != static_cast<Eigen::Index>(sample->dim())) {
        throw ConfigError("directions and sample have different dimensions");
      }
      const UniformFitOptions opts = fit_options(c, est_flags.prior);
      return [=] {
        const LinearClassFit fit = fit_linear_class_detailed(*sample, *dirs, c.u, opts);
        const FunctionClass cls = FunctionClass::linear(*dirs);
        std::ostringstream csv;
        csv.precision(17);
        csv << "function,value\n";
        for (FunctionId f = 0; f < cls.size(); ++f) csv << cls.name(f) << ',' << fit.estimate.values[f] << '\n';
        write_text(est_out, csv.str());
        if (!dump_seq.empty()) write_json(dump_seq, sequence_to_json(fit.sequence, cls));
        if (!dump_est.empty()) write_json(dump_est, estimate_to_json(fit.estimate, cls));
      };
    });
  }

  if (*sim_cmd) {
    return run([&]() -> std::function<void()> {
      json j = load_config(sim_config);
      set_key(j, "seed", sim_seed);
      override_if(j, "trials", sim_trials);
      override_if(j, "n", sim_n);
      override_if(j, "delta", sim_delta);
      override_if(j, "corruption.eta", sim_eta);
      override_if(j, "threads", sim_threads);
      override_if(j, "width_draws", sim_draws);
      override_if(j, "output.path", sim_out);
      override_if(j, "output.format", sim_format);
      if (no_timing) set_key(j, "record_timing", false);
      ExperimentConfig c = experiment_config_from_json(j);
      // Resolve directions now so a bad CSV is a config error.
      c.directions = experiment_directions(c);
      return [c] {
        const auto records = run_experiment(c);
        const OutputFormat fmt = c.output_format == "json" ? OutputFormat::Json : OutputFormat::Csv;
        if (c.output_path) {
          emit(records, fmt, *c.output_path);
        } else if (fmt == OutputFormat::Json) {
          std::cout << records_to_json(records).dump(2) << "\n";
        } else {
          std::cout << records_to_csv(records);
        }
      };
    });
  }

  if (*cov_cmd) {
    return run([&]() -> std::function<void()> {
      const ExperimentConfig c = experiment_config_from_json(cov_flags.merged());
      auto sample = std::make_shared<Sample>(read_sample_csv(cov_flags.sample));
      const UniformFitOptions opts = fit_options(c, cov_flags.prior);
      std::string diag = cov_diag;
      if (diag.empty()) diag = std::filesystem::path(cov_out).replace_extension(".json").string();
      return [=] {
        const CovarianceEstimate est = covariance_estimate(*sample, opts);
        write_matrix_csv(cov_out, est.matrix);
        write_json(diag, covariance_diagnostics_json(est));
        if (est.warning) std::cerr << "warning: " << *est.warning << "\n";
      };
    });
  }

  if (*lp_cmd) {
    return run([&]() -> std::function<void()> {
      const ExperimentConfig c = experiment_config_from_json(lp_flags.merged());
      auto sample = std::make_shared<Sample>(read_sample_csv(lp_flags.sample));
      auto dirs = std::make_shared<Matrix>(read_matrix_csv(lp_dirs));
      auto queries = std::make_shared<Matrix>(read_matrix_csv(lp_queries));
      if (dirs->cols() != static_cast<Eigen::Index>(sample->dim()) || queries->cols() != dirs->cols()) {
        throw ConfigError("sample, directions and queries must share a dimension");
      }
      if (!(lp_p >= 2.0)) throw ConfigError("--p must be at least 2");
      const UniformFitOptions opts = fit_options(c, lp_flags.prior);
      return [=] {
        const LpOracle oracle = LpOracle::fit(*sample, *dirs, lp_p, opts, lp_eps);
        std::string out = "inside\n";
        for (Eigen::Index i = 0; i < queries->rows(); ++i) {
          out += lp_membership(oracle, queries->row(i).transpose()) ? "true\n" : "false\n";
        }
        write_text(lp_out, out);
      };
    });
  }

  if (*w_cmd) {
    return run([&]() -> std::function<void()> {
      json j = load_config(w_config);
      if (!w_dirs.empty()) set_key(j, "class.directions_csv", w_dirs);
      set_key(j, "seed", w_seed);
      const ExperimentConfig c = experiment_config_from_json(j);
      auto dirs = std::make_shared<Matrix>(experiment_directions(c));
      bool has_distribution = j.contains("distribution");
      for (const auto& [key, value] : j.items()) has_distribution |= key.rfind("distribution.", 0) == 0;
      Matrix sigma;
      if (!w_cov.empty()) sigma = read_matrix_csv(w_cov);
      else if (has_distribution) sigma = c.distribution.second_moment();
      else sigma = Matrix::Identity(dirs->cols(), dirs->cols());
      auto cov = std::make_shared<Matrix>(std::move(sigma));
      if (cov->rows() != dirs->cols()) throw ConfigError("covariance and directions have different dimensions");
      if (w_draws < 2) throw ConfigError("--draws must be at least 2");
      return [=] {
        const FunctionClass cls = FunctionClass::linear(*dirs);
        const WidthEstimate w = gaussian_sup(cls, *cov, w_draws, w_seed, w_workers);
        const double diam = d_F(cls, DistanceOracle::exact_l2(cls, *cov));
        json out = {{"mean", w.mean},   {"std_error", w.std_error}, {"draws", w.draws},
                    {"seed", w.seed},   {"workers", w.workers},     {"d_F", diam}};
        if (diam > 0.0) out["critical_dimension"] = critical_dimension(w, diam);
        write_json(w_out, out);
      };
    });
  }
  return 0;
}
