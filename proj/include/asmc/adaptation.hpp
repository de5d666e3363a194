#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/kernels.hpp"
#include "asmc/particles.hpp"
#include "asmc/random.hpp"

namespace asmc {

// One kernel family offered to the sampler with the support of its initial
// scaling distribution (h drawn uniformly on [h_min, h_max]).
struct MenuEntry {
  KernelSpec::Kind kind = KernelSpec::Kind::RandomWalk;
  Ordering ordering = Ordering::None;
  double h_min = 0.0;
  double h_max = 1.0;
};

using KernelMenu = std::vector<MenuEntry>;

// (kernel, h) pair attached to one particle slot. The kind is carried along
// so clamping after jitter does not need the menu.
struct TuningEntry {
  int kernel_id = 0;
  KernelSpec::Kind kind = KernelSpec::Kind::RandomWalk;
  double h = 1.0;
};

// Population of kernel/scaling pairs, one per particle, plus the utility
// weighting constant a and the jitter applied on resampling.
struct TuningPopulation {
  std::vector<TuningEntry> entries;
  Eigen::VectorXd scores;  // a + jump statistic after the latest move
  double jitter_sd = 0.015;
  double a = 0.0;
};

enum class ScoreStatistic { LambdaTilde, Lambda };

namespace detail {

// Floor keeps random-walk scalings positive; Liu-West shrinkage needs h <= 1.
inline double clamp_h(KernelSpec::Kind kind, double h) {
  h = std::max(h, 1e-6);
  if (kind == KernelSpec::Kind::LiuWest) h = std::min(h, 1.0);
  return h;
}

}  // namespace detail

inline TuningPopulation init_population(const KernelMenu& menu, int count,
                                        Rng& rng, double jitter_sd = 0.015,
                                        double a = 0.0) {
  if (menu.empty()) throw EmptyMenu("init_population: menu is empty");
  TuningPopulation pop;
  pop.jitter_sd = jitter_sd;
  pop.a = a;
  pop.entries.reserve(static_cast<std::size_t>(count));
  const int n_kernels = static_cast<int>(menu.size());
  for (int j = 0; j < count; ++j) {
    const int id = draw_index(rng, n_kernels);
    const MenuEntry& entry = menu[static_cast<std::size_t>(id)];
    const double h =
        entry.h_min + (entry.h_max - entry.h_min) * draw_uniform(rng);
    pop.entries.push_back({id, entry.kind, detail::clamp_h(entry.kind, h)});
  }
  pop.scores = Eigen::VectorXd::Zero(count);
  return pop;
}

// a + lambda_tilde per slot (or the raw lambda when requested).
inline Eigen::VectorXd score(const TuningPopulation& pop,
                             const std::vector<MoveRecord>& records,
                             ScoreStatistic stat = ScoreStatistic::LambdaTilde) {
  if (records.size() != pop.entries.size()) {
    throw LengthMismatch("score: record count != population size");
  }
  Eigen::VectorXd s(static_cast<Eigen::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    const double stat_value = stat == ScoreStatistic::LambdaTilde
                                  ? records[j].lambda_tilde
                                  : records[j].lambda;
    s[static_cast<Eigen::Index>(j)] = pop.a + stat_value;
  }
  return s;
}

// Resamples pairs proportional to their scores (multinomially, even when the
// particles use residual resampling), jitters h, clamps it into the kernel's
// valid range, and shuffles the result across particle slots. When every
// score is zero the resampling weights fall back to uniform.
inline TuningPopulation update(const TuningPopulation& pop,
                               const Eigen::VectorXd& scores, Rng& rng) {
  const int m = static_cast<int>(pop.entries.size());
  if (scores.size() != m) {
    throw LengthMismatch("update: score count != population size");
  }
  const double total = scores.sum();
  const Eigen::VectorXd weights =
      total > 0.0 ? (scores / total).eval()
                  : Eigen::VectorXd::Constant(m, 1.0 / m);
  const std::vector<int> idx = multinomial_resample(weights, m, rng);
  TuningPopulation out;
  out.jitter_sd = pop.jitter_sd;
  out.a = pop.a;
  out.entries.reserve(static_cast<std::size_t>(m));
  for (const int i : idx) {
    TuningEntry e = pop.entries[static_cast<std::size_t>(i)];
    if (out.jitter_sd > 0.0) e.h += out.jitter_sd * draw_normal(rng);
    e.h = detail::clamp_h(e.kind, e.h);
    out.entries.push_back(e);
  }
  std::shuffle(out.entries.begin(), out.entries.end(), rng);
  out.scores = Eigen::VectorXd::Zero(m);
  return out;
}

// Iterations without a move step leave the population untouched.
inline const TuningPopulation& freeze_on_no_move(const TuningPopulation& pop) {
  return pop;
}

}  // namespace asmc
