// Command-line front end: simulate benchmark datasets, run one sampler,
// reproduce the repeated-run comparison, trace jump-utility curves, and run
// the adaptation consistency checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asmc/asmc.hpp"

namespace {

// JSON config support: a flat object whose keys are the long option names of
// one subcommand. Values given on the command line win. CLI11 only reads
// config files on the top-level app, so these are applied by hand after the
// parse, before the subcommand runs.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) {
    throw std::invalid_argument("config root must be a JSON object: " + path);
  }
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw std::invalid_argument("config key '" + key +
                                  "' matches no option of '" +
                                  sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;  // the command line wins
    if (value.is_boolean()) {
      opt->add_result(value.get<bool>() ? "true" : "false");
    } else if (value.is_string()) {
      opt->add_result(value.get<std::string>());
    } else if (value.is_number()) {
      opt->add_result(value.dump());
    } else {
      throw std::invalid_argument("config value for '" + key +
                                  "' is not a scalar");
    }
    opt->run_callback();
  }
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ASMC_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

void write_or_print(const std::string& path,
                    const std::function<void(std::ostream&)>& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
  } else {
    std::ofstream os = open_output(path);
    writer(os);
  }
}

asmc::ResamplerKind parse_resampler(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  if (s == "residual") return asmc::ResamplerKind::Residual;
  if (s == "multinomial") return asmc::ResamplerKind::Multinomial;
  throw std::invalid_argument("unknown resampler: " + s);
}

asmc::ScoreStatistic parse_score_statistic(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  if (s == "lambda_tilde") return asmc::ScoreStatistic::LambdaTilde;
  if (s == "lambda") return asmc::ScoreStatistic::Lambda;
  throw std::invalid_argument("unknown score statistic: " + s);
}

asmc::PredictivePool parse_pool(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  if (s == "union") return asmc::PredictivePool::Union;
  if (s == "acceptance_weighted") {
    return asmc::PredictivePool::AcceptanceWeighted;
  }
  throw std::invalid_argument("unknown predictive pool: " + s);
}

struct RunOptions {
  std::string method = "kmix";
  int dataset = 0;
  std::string target;
  std::string data_file;
  int components = 0;
  int n = 100;
  int particles = 0;
  std::uint64_t seed = 1;
  int dim = 5;
  double prior_var = 5.0;
  double ess_threshold = 0.5;
  double a = 0.0;
  double jitter = 0.015;
  std::string resampler = "residual";
  bool no_final_move = false;
  bool shuffle = false;
  int moves_per_step = 1;
  std::string score_statistic = "lambda_tilde";
  std::string pool = "union";
  double rw_h_max = 2.0;
  int amcmc_iterations = 0;
  std::string trace_file;
  std::string particles_file;
  std::string population_file;
  std::string predictive_file;
};

void add_sampler_flags(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--particles", o.particles,
                  "Particle count (0 picks the benchmark default)");
  cmd->add_option("--seed", o.seed, "Root seed for the run");
  cmd->add_option("--ess-threshold", o.ess_threshold,
                  "Resample-move when ESS falls below this fraction of the "
                  "particle count");
  cmd->add_option("--a", o.a, "Additive constant in the kernel score");
  cmd->add_option("--jitter", o.jitter,
                  "Standard deviation of the h perturbation on updates");
  cmd->add_option("--resampler", o.resampler,
                  "Particle resampler: residual or multinomial");
  cmd->add_flag("--no-final-move", o.no_final_move,
                "Skip the forced resample-move at the last observation");
  cmd->add_option("--moves-per-step", o.moves_per_step,
                  "Metropolis-Hastings rounds per move step");
  cmd->add_option("--score-statistic", o.score_statistic,
                  "Kernel score statistic: lambda_tilde or lambda");
  cmd->add_option("--pool", o.pool,
                  "Predictive pool: union or acceptance_weighted");
  cmd->add_option("--rw-hmax", o.rw_h_max,
                  "Upper end of the initial random-walk scaling draw");
  cmd->add_option("--amcmc-iterations", o.amcmc_iterations,
                  "Iteration count for the MCMC baseline (0 picks by "
                  "dimension)");
}

asmc::RunConfig to_config(const RunOptions& o) {
  asmc::RunConfig cfg;
  cfg.method = asmc::parse_method(o.method);
  cfg.particles = o.particles;
  cfg.ess_threshold_fraction = o.ess_threshold;
  cfg.seed = o.seed;
  cfg.a = o.a;
  cfg.jitter_sd = o.jitter;
  cfg.resampler = parse_resampler(o.resampler);
  cfg.force_final_move = !o.no_final_move;
  cfg.moves_per_step = o.moves_per_step;
  cfg.score_statistic = parse_score_statistic(o.score_statistic);
  cfg.predictive_pool = parse_pool(o.pool);
  cfg.rw_h_max = o.rw_h_max;
  cfg.amcmc_iterations = o.amcmc_iterations;
  return cfg;
}

int run_command(const RunOptions& o) {
  asmc::RunConfig cfg = to_config(o);
  std::unique_ptr<asmc::SequentialTarget> target;

  if (o.target == "gaussian5" || (o.dataset == 0 && o.data_file.empty())) {
    asmc::Rng data_rng = asmc::make_rng(o.seed, asmc::stream::data);
    std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(o.n));
    for (auto& yi : y) yi = asmc::draw_normal_vector(data_rng, o.dim);
    target = std::make_unique<asmc::GaussianMeanTarget>(std::move(y),
                                                        o.prior_var, o.dim);
    if (cfg.particles == 0) cfg.particles = 2000;
  } else {
    std::vector<double> y;
    int r = o.components;
    if (!o.data_file.empty()) {
      std::ifstream is(o.data_file);
      if (!is) throw std::runtime_error("cannot open: " + o.data_file);
      y = asmc::read_dataset(is);
      if (r == 0) {
        throw std::invalid_argument("--components is required with --data");
      }
    } else {
      asmc::Rng data_rng = asmc::make_rng(o.seed, asmc::stream::data);
      y = asmc::simulate_dataset(o.dataset, o.n, data_rng);
      if (r == 0) r = asmc::dataset_spec(o.dataset).components();
    }
    if (o.shuffle) {
      asmc::Rng srng = asmc::make_rng(o.seed, asmc::stream::shuffle);
      std::shuffle(y.begin(), y.end(), srng);
    }
    target = std::make_unique<asmc::MixtureTarget>(std::move(y), r);
    if (cfg.particles == 0) cfg.particles = r >= 3 ? 5000 : 2000;
  }

  const asmc::RunOutput out = asmc::run_method(*target, cfg);

  if (out.trace) {
    if (!o.trace_file.empty()) {
      write_or_print(o.trace_file, [&](std::ostream& os) {
        asmc::write_trace_csv(os, *out.trace);
      });
    }
    if (!o.particles_file.empty()) {
      write_or_print(o.particles_file, [&](std::ostream& os) {
        asmc::write_final_particles_csv(os, *out.trace);
      });
    }
    if (!o.population_file.empty()) {
      write_or_print(o.population_file, [&](std::ostream& os) {
        asmc::write_population_log_csv(os, *out.trace);
      });
    }
  } else if (out.amcmc) {
    if (!o.particles_file.empty()) {
      write_or_print(o.particles_file, [&](std::ostream& os) {
        asmc::write_samples_csv(os, out.amcmc->samples);
      });
    }
    if (!o.trace_file.empty() || !o.population_file.empty()) {
      std::cerr << "note: the MCMC baseline has no trace or population log\n";
    }
  }
  if (!o.predictive_file.empty()) {
    write_or_print(o.predictive_file, [&](std::ostream& os) {
      asmc::write_predictive_csv(os, out.summary.grid);
    });
  }

  std::ostringstream msg;
  msg << "method=" << asmc::method_name(cfg.method)
      << " particles=" << cfg.particles << " seed=" << cfg.seed;
  if (!std::isnan(out.summary.jd_mean)) {
    msg << " jd=" << out.summary.jd_mean
        << " acc_prob=" << out.summary.acc_prob_mean
        << " acc_rate=" << out.summary.acc_rate;
  }
  std::cerr << msg.str() << "\n";
  return 0;
}

int oracle_command(const std::string& which, std::uint64_t seed) {
  std::vector<asmc::OracleReport> reports;
  if (which == "prop1" || which == "all") {
    reports.push_back(asmc::oracle_prop1(seed));
  }
  if (which == "lemma1" || which == "all") {
    reports.push_back(asmc::oracle_lemma1(seed));
  }
  if (which == "thm1" || which == "all") {
    reports.push_back(asmc::oracle_thm1());
  }
  if (reports.empty()) {
    throw std::invalid_argument("unknown oracle: " + which);
  }
  std::cout << "oracle,check,value,threshold,pass\n";
  bool all_pass = true;
  for (const auto& rep : reports) {
    for (const auto& check : rep.checks) {
      std::cout << rep.oracle << "," << check.name << ","
                << asmc::format_double(check.value) << ","
                << asmc::format_double(check.threshold) << ","
                << (check.pass ? 1 : 0) << "\n";
    }
    all_pass = all_pass && rep.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive sequential Monte Carlo sampler"};
  app.require_subcommand(1);

  const std::uint64_t env_seed = default_seed();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a benchmark dataset");
  std::string sim_config;
  sim->add_option("--config", sim_config, "JSON config mirroring these flags");
  int sim_dataset = 0;
  int sim_n = 100;
  std::uint64_t sim_seed = env_seed;
  std::string sim_out;
  sim->add_option("--dataset", sim_dataset, "Benchmark dataset id (1-6)");
  sim->add_option("--n", sim_n, "Number of observations");
  sim->add_option("--seed", sim_seed, "Seed for the draw");
  sim->add_option("--out", sim_out, "Output file (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run one sampler on one dataset");
  std::string run_config;
  run->add_option("--config", run_config, "JSON config mirroring these flags");
  RunOptions ro;
  ro.seed = env_seed;
  run->add_option("--method", ro.method,
                  "rwfixed, rwadaptive, lwmean, lwvariance, kmix or amcmc");
  run->add_option("--dataset", ro.dataset, "Benchmark mixture dataset (1-6)");
  run->add_option("--target", ro.target,
                  "Alternative target: gaussian5 (Gaussian mean model)");
  run->add_option("--data", ro.data_file,
                  "Observations file, one value per line");
  run->add_option("--components", ro.components,
                  "Mixture components when --data is used");
  run->add_option("--n", ro.n, "Observations to simulate");
  run->add_option("--dim", ro.dim, "Dimension of the Gaussian mean model");
  run->add_option("--prior-var", ro.prior_var,
                  "Prior variance of the Gaussian mean model");
  run->add_flag("--shuffle", ro.shuffle,
                "Shuffle observation order before the run");
  add_sampler_flags(run, ro);
  run->add_option("--trace", ro.trace_file, "Trace CSV output path");
  run->add_option("--final-particles", ro.particles_file,
                  "Final particle CSV output path");
  run->add_option("--population-log", ro.population_file,
                  "Kernel population log CSV output path");
  run->add_option("--predictive", ro.predictive_file,
                  "Predictive density CSV output path");

  // study
  auto* st = app.add_subcommand(
      "study", "Repeated-run method comparison on one dataset");
  std::string st_config;
  st->add_option("--config", st_config, "JSON config mirroring these flags");
  RunOptions so;
  so.seed = env_seed;
  int st_dataset = 0;
  int st_runs = 20;
  std::string st_methods = "rwfixed,rwadaptive,lwmean,lwvariance,kmix,amcmc";
  std::string st_out;
  st->add_option("--dataset", st_dataset, "Benchmark dataset id (1-6)");
  st->add_option("--methods", st_methods, "Comma-separated method list");
  st->add_option("--runs", st_runs, "Repeated runs per method");
  st->add_option("--n", so.n, "Observations to simulate");
  add_sampler_flags(st, so);
  st->add_option("--out", st_out, "Study table CSV output path");
  const auto study_action = [&]() {
    if (st_dataset < 1) {
      throw std::invalid_argument("study: --dataset is required");
    }
    asmc::StudyConfig sc;
    sc.dataset = st_dataset;
    sc.runs = st_runs;
    sc.particles = so.particles;
    sc.n_obs = so.n;
    sc.seed = so.seed;
    sc.base = to_config(so);
    sc.methods.clear();
    std::stringstream ss(st_methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) sc.methods.push_back(asmc::parse_method(tok));
    }
    const asmc::StudyResult result = asmc::study(sc);
    write_or_print(st_out, [&](std::ostream& os) {
      asmc::write_study_csv(os, result);
    });
  };

  // gcurve
  auto* gc = app.add_subcommand(
      "gcurve", "Jump-utility curve over h on a standard Gaussian target");
  std::string gc_config;
  gc->add_option("--config", gc_config, "JSON config mirroring these flags");
  std::string gc_kernel = "rw";
  int gc_dim = 5;
  double gc_hmin = 0.05;
  double gc_hmax = 3.0;
  int gc_steps = 60;
  int gc_samples = 100000;
  std::uint64_t gc_seed = env_seed;
  std::string gc_out;
  gc->add_option("--kernel", gc_kernel, "rw or lw");
  gc->add_option("--dim", gc_dim, "Target dimension");
  gc->add_option("--hmin", gc_hmin, "Smallest h");
  gc->add_option("--hmax", gc_hmax, "Largest h");
  gc->add_option("--steps", gc_steps, "Grid size");
  gc->add_option("--samples", gc_samples, "Monte Carlo draws per grid point");
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--out", gc_out, "Curve CSV output path");
  const auto gcurve_action = [&]() {
    const asmc::StandardNormal target{gc_dim};
    const asmc::WeightedMoments mom = target.moments();
    std::vector<double> grid(static_cast<std::size_t>(gc_steps));
    for (int i = 0; i < gc_steps; ++i) {
      grid[static_cast<std::size_t>(i)] =
          gc_steps == 1 ? gc_hmin
                        : gc_hmin + (gc_hmax - gc_hmin) * i / (gc_steps - 1.0);
    }
    const asmc::KernelSpec::Kind kind = gc_kernel == "lw"
                                            ? asmc::KernelSpec::Kind::LiuWest
                                            : asmc::KernelSpec::Kind::RandomWalk;
    asmc::Rng rng = asmc::make_rng(gc_seed, asmc::stream::dynamics);
    const auto points = asmc::g_curve(
        [&target](const Eigen::VectorXd& x) { return target.log_density(x); },
        [&target](asmc::Rng& r) { return target.sample(r); }, mom, kind, grid,
        gc_samples, rng);
    write_or_print(gc_out, [&](std::ostream& os) {
      asmc::write_gcurve_csv(os, points);
    });
  };

  // oracle
  auto* orc = app.add_subcommand(
      "oracle", "Consistency checks for the adaptation rule");
  std::string orc_config;
  orc->add_option("--config", orc_config, "JSON config mirroring these flags");
  std::string orc_name = "all";
  std::uint64_t orc_seed = env_seed;
  orc->add_option("name", orc_name, "prop1, lemma1, thm1 or all");
  orc->add_option("--seed", orc_seed, "Seed for the synthetic populations");

  try {
    app.parse(argc, argv);
    if (sim->parsed()) {
      apply_config(sim, sim_config);
      if (sim_dataset < 1) {
        throw std::invalid_argument("simulate: --dataset is required");
      }
      asmc::Rng rng = asmc::make_rng(sim_seed, asmc::stream::data);
      const std::vector<double> y =
          asmc::simulate_dataset(sim_dataset, sim_n, rng);
      write_or_print(sim_out,
                     [&](std::ostream& os) { asmc::write_dataset(os, y); });
      return 0;
    }
    if (run->parsed()) {
      apply_config(run, run_config);
      return run_command(ro);
    }
    if (st->parsed()) {
      apply_config(st, st_config);
      study_action();
      return 0;
    }
    if (gc->parsed()) {
      apply_config(gc, gc_config);
      gcurve_action();
      return 0;
    }
    apply_config(orc, orc_config);
    return oracle_command(orc_name, orc_seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
