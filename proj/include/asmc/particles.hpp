#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/random.hpp"

namespace asmc {

// Weighted particle set; column j of `particles` is one parameter vector.
// Log weights are kept unnormalized between reweighting steps.
struct ParticleSystem {
  Eigen::MatrixXd particles;    // d x M
  Eigen::VectorXd log_weights;  // M

  Eigen::Index dim() const { return particles.rows(); }
  Eigen::Index count() const { return particles.cols(); }
};

struct WeightedMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;   // includes the jitter when regularized
  Eigen::MatrixXd chol_lower;   // L with L L^T = covariance
  bool regularized = false;
};

// Normalized weights plus the log normalizing constant. NaN log weights are
// treated as -inf; if no entry is finite the system has degenerated and
// nothing sensible can be done downstream.
inline std::pair<Eigen::VectorXd, double> normalize_log_weights(
    const Eigen::VectorXd& log_weights) {
  const Eigen::Index m = log_weights.size();
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double max_lw = neg_inf;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lw = log_weights[i];
    if (std::isfinite(lw) && lw > max_lw) max_lw = lw;
  }
  if (!std::isfinite(max_lw)) {
    throw AllWeightsDegenerate("normalize_log_weights: no finite log weight");
  }
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lw = log_weights[i];
    w[i] = std::isnan(lw) ? 0.0 : std::exp(lw - max_lw);
  }
  const double sum = w.sum();
  w /= sum;
  return {std::move(w), max_lw + std::log(sum)};
}

// Effective sample size of normalized weights, 1 / sum(w^2).
inline double ess(const Eigen::VectorXd& weights) {
  return 1.0 / weights.squaredNorm();
}

// Inverse-CDF multinomial resampling via sorted uniforms; output indices are
// ascending. Expects normalized weights.
inline std::vector<int> multinomial_resample(const Eigen::VectorXd& weights,
                                             int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("multinomial_resample: count < 1");
  const Eigen::Index m = weights.size();
  if (m < 1) throw DimensionMismatch("multinomial_resample: empty weights");
  Eigen::Index last = m - 1;
  while (last > 0 && weights[last] <= 0.0) --last;
  std::vector<double> u(static_cast<std::size_t>(count));
  for (auto& ui : u) ui = draw_uniform(rng);
  std::sort(u.begin(), u.end());
  std::vector<int> idx(static_cast<std::size_t>(count));
  Eigen::Index j = 0;
  double cum = weights[0];
  for (int k = 0; k < count; ++k) {
    while (u[static_cast<std::size_t>(k)] > cum && j < last) {
      ++j;
      cum += weights[j];
    }
    idx[static_cast<std::size_t>(k)] = static_cast<int>(j);
  }
  return idx;
}

// Deterministic floor(count * w_j) copies per index, residual mass resampled
// multinomially; output sorted ascending.
inline std::vector<int> residual_resample(const Eigen::VectorXd& weights,
                                          int count, Rng& rng) {
  if (count < 1) throw std::invalid_argument("residual_resample: count < 1");
  const Eigen::Index m = weights.size();
  if (m < 1) throw DimensionMismatch("residual_resample: empty weights");
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(count));
  Eigen::VectorXd resid(m);
  int remaining = count;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double cw = count * weights[j];
    const double fl = std::floor(cw);
    resid[j] = cw - fl;
    const int copies = static_cast<int>(fl);
    for (int c = 0; c < copies; ++c) idx.push_back(static_cast<int>(j));
    remaining -= copies;
  }
  if (remaining > 0) {
    const double rs = resid.sum();
    const Eigen::VectorXd rw = rs > 0.0 ? (resid / rs).eval() : weights;
    const std::vector<int> extra = multinomial_resample(rw, remaining, rng);
    idx.insert(idx.end(), extra.begin(), extra.end());
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

// Cholesky of a covariance, adding jitter on the diagonal when the plain
// factorization fails (ties in the particle set make this routine).
inline WeightedMoments moments_from(Eigen::VectorXd mean,
                                    Eigen::MatrixXd covariance) {
  WeightedMoments out;
  out.mean = std::move(mean);
  out.covariance = 0.5 * (covariance + covariance.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(out.covariance);
  if (llt.info() == Eigen::Success) {
    out.chol_lower = llt.matrixL();
    return out;
  }
  const Eigen::Index d = out.covariance.rows();
  double lambda =
      1e-8 * std::max(out.covariance.trace() / static_cast<double>(d), 1.0);
  for (int attempt = 0; attempt <= 20; ++attempt) {
    Eigen::MatrixXd jittered =
        out.covariance + lambda * Eigen::MatrixXd::Identity(d, d);
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      out.covariance = std::move(jittered);
      out.chol_lower = llt.matrixL();
      out.regularized = true;
      return out;
    }
    lambda *= 2.0;
  }
  throw CovarianceNotFactorizable(
      "moments_from: covariance not factorizable after repeated jitter");
}

// Weighted mean and covariance (no Bessel correction). Expects normalized
// weights; needs at least two particles for a meaningful covariance.
inline WeightedMoments weighted_moments(const Eigen::MatrixXd& particles,
                                        const Eigen::VectorXd& weights) {
  if (weights.size() != particles.cols()) {
    throw DimensionMismatch("weighted_moments: weight count != particle count");
  }
  if (particles.cols() < 2) {
    throw DimensionMismatch("weighted_moments: need at least two particles");
  }
  Eigen::VectorXd mean = particles * weights;
  Eigen::MatrixXd centered = particles.colwise() - mean;
  Eigen::MatrixXd cov =
      centered * weights.asDiagonal() * centered.transpose();
  return moments_from(std::move(mean), std::move(cov));
}

inline WeightedMoments weighted_moments(const ParticleSystem& system) {
  const auto [w, log_z] = normalize_log_weights(system.log_weights);
  (void)log_z;
  return weighted_moments(system.particles, w);
}

}  // namespace asmc
