#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/samplers.hpp"
#include "asmc/targets.hpp"

namespace asmc {

struct PredictiveGrid {
  Eigen::VectorXd points;
  Eigen::VectorXd values;
};

inline Eigen::VectorXd predictive_grid_points(int count = 100, double lo = -2.5,
                                              double hi = 2.5) {
  return Eigen::VectorXd::LinSpaced(count, lo, hi);
}

// Rao-Blackwellised predictive density from the last move step. The Union
// pool averages over accepted states and proposals with equal weight; the
// AcceptanceWeighted pool mixes each proposal with its pre-move state using
// the acceptance probability.
inline PredictiveGrid predictive_density(
    const RunTrace& trace, const SequentialTarget& target,
    PredictivePool pool = PredictivePool::Union,
    const Eigen::VectorXd& points = predictive_grid_points()) {
  if (trace.final_records.empty()) {
    throw std::logic_error("predictive_density: run has no move step");
  }
  PredictiveGrid out;
  out.points = points;
  out.values = Eigen::VectorXd::Zero(points.size());
  const double m = static_cast<double>(trace.final_records.size());
  if (pool == PredictivePool::Union) {
    for (const MoveRecord& rec : trace.final_records) {
      out.values += target.obs_density_grid(rec.theta_next, points);
      out.values += target.obs_density_grid(rec.theta_proposed, points);
    }
    out.values /= 2.0 * m;
  } else {
    for (const MoveRecord& rec : trace.final_records) {
      out.values +=
          rec.acc_prob * target.obs_density_grid(rec.theta_proposed, points);
      out.values += (1.0 - rec.acc_prob) *
                    target.obs_density_grid(rec.theta_prev, points);
    }
    out.values /= m;
  }
  return out;
}

inline PredictiveGrid predictive_density_from_samples(
    const Eigen::MatrixXd& samples, const SequentialTarget& target,
    const Eigen::VectorXd& points = predictive_grid_points()) {
  PredictiveGrid out;
  out.points = points;
  out.values = Eigen::VectorXd::Zero(points.size());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    out.values += target.obs_density_grid(samples.col(j), points);
  }
  out.values /= static_cast<double>(samples.cols());
  return out;
}

// Mean over grid points of the across-run variance (unbiased, J - 1) of the
// predictive density estimates.
inline double vpd(const std::vector<PredictiveGrid>& runs) {
  if (runs.size() < 2) throw TooFewRuns("vpd: need at least two runs");
  const Eigen::Index g = runs[0].values.size();
  for (const auto& run : runs) {
    if (run.values.size() != g) {
      throw LengthMismatch("vpd: grids differ in size");
    }
  }
  const double j = static_cast<double>(runs.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < g; ++i) {
    double mean = 0.0;
    for (const auto& run : runs) mean += run.values[i];
    mean /= j;
    double ss = 0.0;
    for (const auto& run : runs) {
      const double dev = run.values[i] - mean;
      ss += dev * dev;
    }
    total += ss / (j - 1.0);
  }
  return total / static_cast<double>(g);
}

// Canonical kernel slots shared by the cross-method tables: random walk on
// by-means moments, shrinkage on by-means moments, shrinkage on by-variances
// moments.
inline constexpr int n_kernel_slots = 3;

inline int kernel_slot(KernelSpec::Kind kind, Ordering ordering) {
  if (kind == KernelSpec::Kind::RandomWalk) {
    return ordering == Ordering::ByVariances ? -1 : 0;
  }
  if (ordering == Ordering::ByMeans) return 1;
  if (ordering == Ordering::ByVariances) return 2;
  return -1;
}

// Per-run outputs shared across methods. Kernel slots a method does not use
// stay NaN.
struct RunSummary {
  PredictiveGrid grid;
  double jd_mean = std::numeric_limits<double>::quiet_NaN();
  double acc_prob_mean = std::numeric_limits<double>::quiet_NaN();
  double acc_rate = std::numeric_limits<double>::quiet_NaN();
  std::array<double, n_kernel_slots> h_by_kernel{
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN()};
  std::array<double, n_kernel_slots> propn_by_kernel{
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN()};
};

namespace detail {

inline RunSummary summarize_smc(const RunTrace& trace,
                                const SequentialTarget& target,
                                const RunConfig& cfg) {
  RunSummary out;
  out.grid = predictive_density(trace, target, cfg.predictive_pool);
  if (!trace.move_steps.empty()) {
    const MoveStepStats& last = trace.move_steps.back();
    out.jd_mean = last.jd_mean;
    out.acc_prob_mean = last.acc_prob_mean;
    out.acc_rate = last.acc_rate;
  }
  const auto& entries = trace.final_population.entries;
  std::array<double, n_kernel_slots> h_sum{0.0, 0.0, 0.0};
  std::array<int, n_kernel_slots> count{0, 0, 0};
  for (const TuningEntry& e : entries) {
    const MenuEntry& me = trace.menu[static_cast<std::size_t>(e.kernel_id)];
    const int slot = kernel_slot(me.kind, me.ordering);
    if (slot < 0) continue;
    h_sum[static_cast<std::size_t>(slot)] += e.h;
    ++count[static_cast<std::size_t>(slot)];
  }
  for (const MenuEntry& me : trace.menu) {
    const int slot = kernel_slot(me.kind, me.ordering);
    if (slot < 0) continue;
    const std::size_t s = static_cast<std::size_t>(slot);
    out.propn_by_kernel[s] =
        count[s] / static_cast<double>(entries.size());
    if (count[s] > 0) out.h_by_kernel[s] = h_sum[s] / count[s];
  }
  return out;
}

}  // namespace detail

struct RunOutput {
  RunSummary summary;
  std::optional<RunTrace> trace;
  std::optional<AmcmcResult> amcmc;
};

// Dispatches a method name to its sampler and collects the shared per-run
// summary.
inline RunOutput run_method(const SequentialTarget& target,
                            const RunConfig& cfg) {
  RunOutput out;
  if (cfg.method == Method::RWfixed) {
    const KernelSpec ks{KernelSpec::Kind::RandomWalk, Ordering::ByMeans,
                        reference_rw_scaling(target.dim())};
    RunTrace tr = ibis_run(target, ks, cfg);
    out.summary = detail::summarize_smc(tr, target, cfg);
    out.trace = std::move(tr);
  } else if (cfg.method == Method::AMCMC) {
    AmcmcResult res = amcmc_run(target, cfg);
    out.summary.grid = predictive_density_from_samples(res.samples, target);
    out.summary.jd_mean = res.jd_mean;
    out.summary.acc_prob_mean = res.acc_prob_mean;
    out.summary.acc_rate = res.acc_rate;
    out.summary.h_by_kernel[0] = res.h;
    out.amcmc = std::move(res);
  } else {
    RunTrace tr = asmc_run(target, method_menu(cfg.method, cfg), cfg);
    out.summary = detail::summarize_smc(tr, target, cfg);
    out.trace = std::move(tr);
  }
  return out;
}

struct StudyConfig {
  int dataset = 1;
  std::vector<Method> methods = {Method::RWfixed,    Method::RWadaptive,
                                 Method::LWmean,     Method::LWvariance,
                                 Method::Kmix,       Method::AMCMC};
  int runs = 20;
  int particles = 0;  // 0: 2000 for two components, 5000 for three
  int n_obs = 100;
  std::uint64_t seed = 1;
  RunConfig base;
};

struct MethodSummary {
  Method method = Method::Kmix;
  int runs_completed = 0;
  int runs_failed = 0;
  double vpd_value = std::numeric_limits<double>::quiet_NaN();
  double rel_vpd = std::numeric_limits<double>::quiet_NaN();
  double jd = std::numeric_limits<double>::quiet_NaN();
  double acc_prob_mean = std::numeric_limits<double>::quiet_NaN();
  double acc_rate = std::numeric_limits<double>::quiet_NaN();
  std::array<double, n_kernel_slots> h_by_kernel{
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN()};
  std::array<double, n_kernel_slots> propn_by_kernel{
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN(),
      std::numeric_limits<double>::quiet_NaN()};
};

struct StudyResult {
  int dataset = 0;
  int runs = 0;
  int particles = 0;
  int n_obs = 0;
  std::vector<MethodSummary> methods;
};

// Repeated-run comparison on one benchmark dataset. All methods see the same
// simulated data, the same per-run observation shuffles and the same per-run
// root seeds, so differences come from the kernels alone. Runs that fail
// propagate into runs_failed and drop out of the aggregates. Relative VPD is
// normalized by the best (lowest) sequential method.
inline StudyResult study(const StudyConfig& cfg) {
  const MixtureSpec generating = dataset_spec(cfg.dataset);
  const int r = generating.components();
  const int m = cfg.particles > 0 ? cfg.particles : (r >= 3 ? 5000 : 2000);

  Rng data_rng = make_rng(cfg.seed, stream::data);
  const std::vector<double> base_y =
      simulate_dataset(cfg.dataset, cfg.n_obs, data_rng);

  std::vector<std::vector<double>> shuffled(
      static_cast<std::size_t>(cfg.runs));
  std::vector<std::uint64_t> run_seeds(static_cast<std::size_t>(cfg.runs));
  const std::uint64_t shuffle_root = derive_seed(cfg.seed, stream::shuffle);
  const std::uint64_t run_root = derive_seed(cfg.seed, stream::run);
  for (int j = 0; j < cfg.runs; ++j) {
    std::vector<double> yj = base_y;
    Rng srng(derive_seed(shuffle_root, static_cast<std::uint64_t>(j)));
    std::shuffle(yj.begin(), yj.end(), srng);
    shuffled[static_cast<std::size_t>(j)] = std::move(yj);
    run_seeds[static_cast<std::size_t>(j)] =
        derive_seed(run_root, static_cast<std::uint64_t>(j));
  }

  StudyResult out;
  out.dataset = cfg.dataset;
  out.runs = cfg.runs;
  out.particles = m;
  out.n_obs = cfg.n_obs;

  for (const Method method : cfg.methods) {
    MethodSummary ms;
    ms.method = method;
    std::vector<PredictiveGrid> grids;
    double jd_sum = 0.0;
    double accp_sum = 0.0;
    double accr_sum = 0.0;
    std::array<double, n_kernel_slots> h_sum{0.0, 0.0, 0.0};
    std::array<int, n_kernel_slots> h_count{0, 0, 0};
    std::array<double, n_kernel_slots> propn_sum{0.0, 0.0, 0.0};
    std::array<int, n_kernel_slots> propn_count{0, 0, 0};
    for (int j = 0; j < cfg.runs; ++j) {
      const MixtureTarget target(shuffled[static_cast<std::size_t>(j)], r);
      RunConfig rc = cfg.base;
      rc.method = method;
      rc.particles = m;
      rc.seed = run_seeds[static_cast<std::size_t>(j)];
      RunSummary summary;
      try {
        summary = run_method(target, rc).summary;
      } catch (const Error&) {
        ++ms.runs_failed;
        continue;
      }
      grids.push_back(std::move(summary.grid));
      jd_sum += summary.jd_mean;
      accp_sum += summary.acc_prob_mean;
      accr_sum += summary.acc_rate;
      for (std::size_t s = 0; s < n_kernel_slots; ++s) {
        if (!std::isnan(summary.h_by_kernel[s])) {
          h_sum[s] += summary.h_by_kernel[s];
          ++h_count[s];
        }
        if (!std::isnan(summary.propn_by_kernel[s])) {
          propn_sum[s] += summary.propn_by_kernel[s];
          ++propn_count[s];
        }
      }
    }
    ms.runs_completed = static_cast<int>(grids.size());
    if (ms.runs_completed > 0) {
      ms.jd = jd_sum / ms.runs_completed;
      ms.acc_prob_mean = accp_sum / ms.runs_completed;
      ms.acc_rate = accr_sum / ms.runs_completed;
      for (std::size_t s = 0; s < n_kernel_slots; ++s) {
        if (h_count[s] > 0) ms.h_by_kernel[s] = h_sum[s] / h_count[s];
        if (propn_count[s] > 0) {
          ms.propn_by_kernel[s] = propn_sum[s] / propn_count[s];
        }
      }
    }
    if (ms.runs_completed >= 2) ms.vpd_value = vpd(grids);
    out.methods.push_back(std::move(ms));
  }

  double reference = std::numeric_limits<double>::quiet_NaN();
  for (const MethodSummary& ms : out.methods) {
    if (ms.method == Method::AMCMC || std::isnan(ms.vpd_value)) continue;
    if (std::isnan(reference) || ms.vpd_value < reference) {
      reference = ms.vpd_value;
    }
  }
  if (std::isnan(reference)) {
    for (const MethodSummary& ms : out.methods) {
      if (std::isnan(ms.vpd_value)) continue;
      if (std::isnan(reference) || ms.vpd_value < reference) {
        reference = ms.vpd_value;
      }
    }
  }
  for (MethodSummary& ms : out.methods) {
    if (!std::isnan(ms.vpd_value) && !std::isnan(reference)) {
      ms.rel_vpd = ms.vpd_value / reference;
    }
  }
  return out;
}

struct GCurvePoint {
  double h = 0.0;
  double g_hat = 0.0;
  double se = 0.0;
};

// Monte Carlo estimate of the expected acceptance-weighted squared jump as a
// function of h, from independent (state, proposal) pairs at stationarity.
template <typename LogTarget, typename SampleTarget>
std::vector<GCurvePoint> g_curve(LogTarget&& log_target,
                                 SampleTarget&& sample_target,
                                 const WeightedMoments& moments,
                                 KernelSpec::Kind kind,
                                 const std::vector<double>& h_grid,
                                 int n_samples, Rng& rng) {
  if (n_samples < 2) throw std::invalid_argument("g_curve: n_samples >= 2");
  std::vector<GCurvePoint> out;
  out.reserve(h_grid.size());
  for (const double h : h_grid) {
    const KernelSpec ks{kind, Ordering::None, h};
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      const Eigen::VectorXd theta = sample_target(rng);
      const MoveRecord rec = mh_step(theta, log_target, ks, moments, rng);
      sum += rec.lambda_tilde;
      sum_sq += rec.lambda_tilde * rec.lambda_tilde;
    }
    const double n = static_cast<double>(n_samples);
    const double mean = sum / n;
    const double var = std::max(sum_sq - n * mean * mean, 0.0) / (n - 1.0);
    out.push_back({h, mean, std::sqrt(var / n)});
  }
  return out;
}

// Exact d-dimensional standard Gaussian, the reference target for jump
// utility curves.
struct StandardNormal {
  int dim = 5;

  double log_density(const Eigen::VectorXd& x) const {
    return -0.5 * (dim * log_two_pi + x.squaredNorm());
  }
  Eigen::VectorXd sample(Rng& rng) const {
    return draw_normal_vector(rng, dim);
  }
  WeightedMoments moments() const {
    return moments_from(Eigen::VectorXd::Zero(dim),
                        Eigen::MatrixXd::Identity(dim, dim));
  }
};

}  // namespace asmc
