#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "asmc/adaptation.hpp"
#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/particles.hpp"
#include "asmc/random.hpp"
#include "asmc/targets.hpp"

namespace asmc {

enum class Method { RWfixed, RWadaptive, LWmean, LWvariance, Kmix, AMCMC };
enum class ResamplerKind { Residual, Multinomial };
enum class PredictivePool { Union, AcceptanceWeighted };

struct RunConfig {
  Method method = Method::Kmix;
  int particles = 2000;
  double ess_threshold_fraction = 0.5;
  std::uint64_t seed = 1;
  double a = 0.0;             // additive constant in the score a + jump stat
  double jitter_sd = 0.015;   // sd of the h perturbation on population updates
  ResamplerKind resampler = ResamplerKind::Residual;
  bool force_final_move = true;
  int moves_per_step = 1;
  ScoreStatistic score_statistic = ScoreStatistic::LambdaTilde;
  PredictivePool predictive_pool = PredictivePool::Union;
  double rw_h_max = 2.0;      // upper end of the initial random-walk h draw
  int amcmc_iterations = 0;   // 0: 12000 when dim <= 5, 30000 otherwise
};

// Per-kernel summary for one move step: mean h among slots using the kernel
// and the fraction of slots assigned to it.
struct KernelStepStats {
  double h_mean = std::numeric_limits<double>::quiet_NaN();
  double proportion = 0.0;
};

struct MoveStepStats {
  int iter = 0;
  double acc_prob_mean = 0.0;
  double acc_rate = 0.0;
  double lambda_mean = 0.0;
  double lambda_tilde_mean = 0.0;
  double jd_mean = 0.0;  // realized squared jump, zero on rejection
  std::vector<KernelStepStats> kernels;  // aligned with RunTrace::menu
};

struct IterationRow {
  int iter = 0;
  double ess = 0.0;
  bool resampled = false;
  int move_index = -1;  // into RunTrace::move_steps, -1 when no move happened
};

// Tuning population as it entered a move step, with the scores it earned.
struct PopulationSnapshot {
  int iter = 0;
  std::vector<TuningEntry> entries;
  Eigen::VectorXd scores;
};

struct RunTrace {
  KernelMenu menu;
  std::vector<IterationRow> iterations;
  std::vector<MoveStepStats> move_steps;
  std::vector<PopulationSnapshot> population_log;
  ParticleSystem final_particles;
  TuningPopulation final_population;  // the population behind the final moves
  std::vector<MoveRecord> final_records;
};

namespace detail {

inline void validate(const RunConfig& cfg) {
  if (cfg.particles < 2) {
    throw std::invalid_argument("run config: need at least two particles");
  }
  if (!(cfg.ess_threshold_fraction > 0.0) ||
      cfg.ess_threshold_fraction > 1.0) {
    throw std::invalid_argument(
        "run config: ess_threshold_fraction must lie in (0, 1]");
  }
  if (cfg.moves_per_step < 1) {
    throw std::invalid_argument("run config: moves_per_step must be >= 1");
  }
}

inline std::vector<int> resample_indices(const Eigen::VectorXd& weights,
                                         int count, ResamplerKind kind,
                                         Rng& rng) {
  return kind == ResamplerKind::Residual
             ? residual_resample(weights, count, rng)
             : multinomial_resample(weights, count, rng);
}

inline Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m,
                                      const std::vector<int>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  }
  return out;
}

// Equal-weight moments of the particle set relabelled under one ordering.
// The particles themselves stay as they are; only the moments see the
// canonical labelling.
inline WeightedMoments ordering_moments(const Eigen::MatrixXd& particles,
                                        const SequentialTarget& target,
                                        Ordering ordering) {
  const Eigen::Index m = particles.cols();
  const Eigen::VectorXd w =
      Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  if (ordering == Ordering::None) return weighted_moments(particles, w);
  Eigen::MatrixXd relabelled(particles.rows(), m);
  for (Eigen::Index j = 0; j < m; ++j) {
    relabelled.col(j) = target.relabel(particles.col(j), ordering);
  }
  return weighted_moments(relabelled, w);
}

inline MoveStepStats summarize_move(int iter,
                                    const std::vector<MoveRecord>& records,
                                    const TuningPopulation& pop,
                                    std::size_t n_kernels) {
  MoveStepStats out;
  out.iter = iter;
  const double m = static_cast<double>(records.size());
  std::vector<double> h_sum(n_kernels, 0.0);
  std::vector<int> h_count(n_kernels, 0);
  for (std::size_t j = 0; j < records.size(); ++j) {
    const MoveRecord& rec = records[j];
    out.acc_prob_mean += rec.acc_prob;
    out.acc_rate += rec.accepted ? 1.0 : 0.0;
    out.lambda_mean += rec.lambda;
    out.lambda_tilde_mean += rec.lambda_tilde;
    out.jd_mean += rec.accepted ? rec.lambda : 0.0;
    const TuningEntry& e = pop.entries[j];
    h_sum[static_cast<std::size_t>(e.kernel_id)] += e.h;
    ++h_count[static_cast<std::size_t>(e.kernel_id)];
  }
  out.acc_prob_mean /= m;
  out.acc_rate /= m;
  out.lambda_mean /= m;
  out.lambda_tilde_mean /= m;
  out.jd_mean /= m;
  out.kernels.resize(n_kernels);
  for (std::size_t i = 0; i < n_kernels; ++i) {
    out.kernels[i].proportion = h_count[i] / m;
    if (h_count[i] > 0) out.kernels[i].h_mean = h_sum[i] / h_count[i];
  }
  return out;
}

}  // namespace detail

// Sequential reweight / resample / move with one fixed kernel. Iteration t
// multiplies the weights by the t-th likelihood increment; a move step runs
// when the effective sample size drops below the threshold, and always at
// the final iteration when force_final_move is set.
inline RunTrace ibis_run(const SequentialTarget& target,
                         const KernelSpec& kernel, const RunConfig& cfg) {
  detail::validate(cfg);
  Rng dyn = make_rng(cfg.seed, stream::dynamics);
  const int m = cfg.particles;
  const int n = target.n_obs();

  RunTrace tr;
  tr.menu = {MenuEntry{kernel.kind, kernel.ordering, kernel.h, kernel.h}};

  ParticleSystem sys;
  sys.particles.resize(target.dim(), m);
  for (int j = 0; j < m; ++j) sys.particles.col(j) = target.sample_prior(dyn);
  sys.log_weights = Eigen::VectorXd::Zero(m);

  TuningPopulation pop;
  pop.jitter_sd = 0.0;
  pop.a = cfg.a;
  pop.entries.assign(static_cast<std::size_t>(m),
                     TuningEntry{0, kernel.kind, kernel.h});
  pop.scores = Eigen::VectorXd::Zero(m);

  std::vector<MoveRecord> records;

  for (int t = 1; t <= n; ++t) {
    for (int j = 0; j < m; ++j) {
      sys.log_weights[j] +=
          target.log_lik_increment(sys.particles.col(j), t);
    }
    const auto [w, log_z] = normalize_log_weights(sys.log_weights);
    (void)log_z;
    const double e = ess(w);
    const bool forced = cfg.force_final_move && t == n;
    const bool move = e < cfg.ess_threshold_fraction * m || forced;
    tr.iterations.push_back(
        {t, e, move, move ? static_cast<int>(tr.move_steps.size()) : -1});
    if (!move) continue;

    const std::vector<int> idx =
        detail::resample_indices(w, m, cfg.resampler, dyn);
    sys.particles = detail::gather_columns(sys.particles, idx);
    sys.log_weights.setZero();

    const WeightedMoments mom =
        detail::ordering_moments(sys.particles, target, kernel.ordering);
    const auto log_target = [&target, t](const Eigen::VectorXd& th) {
      return target.log_posterior_upto(th, t);
    };
    records.assign(static_cast<std::size_t>(m), MoveRecord{});
    for (int round = 0; round < cfg.moves_per_step; ++round) {
      for (int j = 0; j < m; ++j) {
        records[static_cast<std::size_t>(j)] =
            mh_step(sys.particles.col(j), log_target, kernel, mom, dyn);
        sys.particles.col(j) =
            records[static_cast<std::size_t>(j)].theta_next;
      }
    }
    pop.scores = score(pop, records, cfg.score_statistic);
    tr.population_log.push_back({t, pop.entries, pop.scores});
    tr.move_steps.push_back(detail::summarize_move(t, records, pop, 1));
  }
  tr.final_particles = std::move(sys);
  tr.final_population = std::move(pop);
  tr.final_records = std::move(records);
  return tr;
}

// Adaptive variant: each particle slot carries a (kernel, h) pair; after a
// move step the pairs are resampled proportional to a + jump statistic,
// jittered and reallocated. The adaptation draws come from their own stream,
// so particle dynamics match ibis_run draw for draw when the menu pins a
// single kernel at a fixed h with zero jitter.
inline RunTrace asmc_run(const SequentialTarget& target, const KernelMenu& menu,
                         const RunConfig& cfg) {
  detail::validate(cfg);
  if (menu.empty()) throw EmptyMenu("asmc_run: menu is empty");
  Rng dyn = make_rng(cfg.seed, stream::dynamics);
  Rng adapt = make_rng(cfg.seed, stream::adaptation);
  const int m = cfg.particles;
  const int n = target.n_obs();

  RunTrace tr;
  tr.menu = menu;

  ParticleSystem sys;
  sys.particles.resize(target.dim(), m);
  for (int j = 0; j < m; ++j) sys.particles.col(j) = target.sample_prior(dyn);
  sys.log_weights = Eigen::VectorXd::Zero(m);

  TuningPopulation pop =
      init_population(menu, m, adapt, cfg.jitter_sd, cfg.a);

  // Distinct orderings in menu order; moments are computed once per ordering
  // per move step and shared by every kernel using that ordering.
  std::vector<Ordering> orderings;
  std::vector<std::size_t> moment_slot(menu.size());
  for (std::size_t i = 0; i < menu.size(); ++i) {
    const Ordering o = menu[i].ordering;
    std::size_t slot = orderings.size();
    for (std::size_t k = 0; k < orderings.size(); ++k) {
      if (orderings[k] == o) {
        slot = k;
        break;
      }
    }
    if (slot == orderings.size()) orderings.push_back(o);
    moment_slot[i] = slot;
  }

  std::vector<MoveRecord> records;

  for (int t = 1; t <= n; ++t) {
    for (int j = 0; j < m; ++j) {
      sys.log_weights[j] +=
          target.log_lik_increment(sys.particles.col(j), t);
    }
    const auto [w, log_z] = normalize_log_weights(sys.log_weights);
    (void)log_z;
    const double e = ess(w);
    const bool forced = cfg.force_final_move && t == n;
    const bool move = e < cfg.ess_threshold_fraction * m || forced;
    tr.iterations.push_back(
        {t, e, move, move ? static_cast<int>(tr.move_steps.size()) : -1});
    if (!move) continue;  // population frozen alongside the particles

    const std::vector<int> idx =
        detail::resample_indices(w, m, cfg.resampler, dyn);
    sys.particles = detail::gather_columns(sys.particles, idx);
    sys.log_weights.setZero();

    std::vector<WeightedMoments> moments;
    moments.reserve(orderings.size());
    for (const Ordering o : orderings) {
      moments.push_back(detail::ordering_moments(sys.particles, target, o));
    }

    const auto log_target = [&target, t](const Eigen::VectorXd& th) {
      return target.log_posterior_upto(th, t);
    };
    records.assign(static_cast<std::size_t>(m), MoveRecord{});
    for (int round = 0; round < cfg.moves_per_step; ++round) {
      for (int j = 0; j < m; ++j) {
        const TuningEntry& te = pop.entries[static_cast<std::size_t>(j)];
        const std::size_t id = static_cast<std::size_t>(te.kernel_id);
        const KernelSpec ks{menu[id].kind, menu[id].ordering, te.h};
        records[static_cast<std::size_t>(j)] = mh_step(
            sys.particles.col(j), log_target, ks, moments[moment_slot[id]],
            dyn);
        sys.particles.col(j) =
            records[static_cast<std::size_t>(j)].theta_next;
      }
    }
    const Eigen::VectorXd scores =
        score(pop, records, cfg.score_statistic);
    tr.population_log.push_back({t, pop.entries, scores});
    tr.move_steps.push_back(
        detail::summarize_move(t, records, pop, menu.size()));
    if (t < n) {
      pop = update(pop, scores, adapt);
    } else {
      // Nothing can propose after an event at t == n, so keep the population
      // that performed the final moves (with its scores) instead of spending
      // an update nobody consumes.
      pop.scores = scores;
    }
  }
  tr.final_particles = std::move(sys);
  tr.final_population = std::move(pop);
  tr.final_records = std::move(records);
  return tr;
}

// Adaptive-covariance random-walk Metropolis baseline: the proposal uses the
// prior covariance for the first 1000 iterations, then the covariance of the
// relabelled chain so far, refreshed every 100 iterations (also after
// burn-in). Reported statistics cover post burn-in iterations only.
struct AmcmcResult {
  Eigen::MatrixXd samples;  // post burn-in states, one per column
  double h = 0.0;
  int iterations = 0;
  int burn_in = 0;
  double acc_prob_mean = 0.0;
  double acc_rate = 0.0;
  double jd_mean = 0.0;
};

inline AmcmcResult amcmc_run(const SequentialTarget& target,
                             const RunConfig& cfg) {
  Rng rng = make_rng(cfg.seed, stream::dynamics);
  const int d = target.dim();
  const int n = target.n_obs();
  const int total = cfg.amcmc_iterations > 0 ? cfg.amcmc_iterations
                                             : (d <= 5 ? 12000 : 30000);
  const int burn = total / 2;

  AmcmcResult out;
  out.h = haario_rw_scaling(d);
  out.iterations = total;
  out.burn_in = burn;

  const KernelSpec ks{KernelSpec::Kind::RandomWalk, Ordering::ByMeans, out.h};
  const auto log_target = [&target, n](const Eigen::VectorXd& th) {
    return target.log_posterior_upto(th, n);
  };

  Eigen::MatrixXd chain(d, total + 1);
  Eigen::MatrixXd relabelled(d, total + 1);
  Eigen::VectorXd theta = target.sample_prior(rng);
  chain.col(0) = theta;
  relabelled.col(0) = target.relabel(theta, Ordering::ByMeans);

  WeightedMoments mom =
      moments_from(Eigen::VectorXd::Zero(d), target.prior_covariance());

  double sum_acc = 0.0;
  double sum_rate = 0.0;
  double sum_jd = 0.0;
  for (int it = 1; it <= total; ++it) {
    if (it > 1000 && (it - 1001) % 100 == 0) {
      const Eigen::VectorXd w =
          Eigen::VectorXd::Constant(it, 1.0 / static_cast<double>(it));
      mom = weighted_moments(relabelled.leftCols(it), w);
    }
    const MoveRecord rec = mh_step(theta, log_target, ks, mom, rng);
    theta = rec.theta_next;
    chain.col(it) = theta;
    relabelled.col(it) = target.relabel(theta, Ordering::ByMeans);
    if (it > burn) {
      sum_acc += rec.acc_prob;
      sum_rate += rec.accepted ? 1.0 : 0.0;
      sum_jd += rec.accepted ? rec.lambda : 0.0;
    }
  }
  const double kept = static_cast<double>(total - burn);
  out.samples = chain.rightCols(total - burn);
  out.acc_prob_mean = sum_acc / kept;
  out.acc_rate = sum_rate / kept;
  out.jd_mean = sum_jd / kept;
  return out;
}

// Kernel menus behind the adaptive method names. Orderings only matter for
// targets whose relabel is not the identity.
inline KernelMenu method_menu(Method method, const RunConfig& cfg) {
  switch (method) {
    case Method::RWadaptive:
      return {{KernelSpec::Kind::RandomWalk, Ordering::ByMeans, 0.0,
               cfg.rw_h_max}};
    case Method::LWmean:
      return {{KernelSpec::Kind::LiuWest, Ordering::ByMeans, 0.0, 1.0}};
    case Method::LWvariance:
      return {{KernelSpec::Kind::LiuWest, Ordering::ByVariances, 0.0, 1.0}};
    case Method::Kmix:
      return {{KernelSpec::Kind::RandomWalk, Ordering::ByMeans, 0.0,
               cfg.rw_h_max},
              {KernelSpec::Kind::LiuWest, Ordering::ByMeans, 0.0, 1.0},
              {KernelSpec::Kind::LiuWest, Ordering::ByVariances, 0.0, 1.0}};
    default:
      throw std::invalid_argument("method_menu: method has no kernel menu");
  }
}

}  // namespace asmc
