#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/math.hpp"
#include "asmc/particles.hpp"
#include "asmc/random.hpp"
#include "asmc/targets.hpp"

namespace asmc {

// A move kernel: proposal family, the ordering its moments were computed
// under, and the scaling h.
struct KernelSpec {
  enum class Kind { RandomWalk, LiuWest };
  Kind kind = Kind::RandomWalk;
  Ordering ordering = Ordering::None;
  double h = 1.0;
};

// Everything one Metropolis-Hastings step produced. lambda is the squared
// Mahalanobis length of the *proposed* jump; lambda_tilde weights it by the
// acceptance probability, the unbiased estimate of expected squared jumping
// distance for this kernel.
struct MoveRecord {
  Eigen::VectorXd theta_prev;
  Eigen::VectorXd theta_proposed;
  Eigen::VectorXd theta_next;
  double acc_prob = 0.0;
  double lambda = 0.0;
  double lambda_tilde = 0.0;
  bool accepted = false;
};

inline double reference_rw_scaling(int dim) {
  return 2.38 / std::sqrt(static_cast<double>(dim));
}

inline double haario_rw_scaling(int dim) {
  return 2.4 / std::sqrt(static_cast<double>(dim));
}

// theta + h L z with L the Cholesky factor of the population covariance.
inline Eigen::VectorXd rw_propose(const Eigen::VectorXd& theta, double h,
                                  const WeightedMoments& moments, Rng& rng) {
  if (!(h > 0.0)) throw InvalidScaling("rw_propose: h must be positive");
  return theta +
         h * (moments.chol_lower * draw_normal_vector(rng, theta.size()));
}

struct LwProposal {
  Eigen::VectorXd draw;
  double log_fwd = 0.0;  // q(draw | theta)
  double log_rev = 0.0;  // q(theta | draw)
};

namespace detail {

// log N(x; mean, (scale L)(scale L)^T) via one triangular solve.
inline double mvn_logpdf_chol(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& chol_lower, double scale) {
  const Eigen::Index d = x.size();
  const Eigen::VectorXd z =
      chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
  double log_det = d * std::log(scale);
  for (Eigen::Index i = 0; i < d; ++i) log_det += std::log(chol_lower(i, i));
  return -0.5 * (d * log_two_pi + z.squaredNorm() / (scale * scale)) - log_det;
}

}  // namespace detail

// Shrinks toward the population mean before adding noise,
//   q(.|theta) = N(alpha theta + (1 - alpha) mean, h^2 Sigma),
// with alpha = sqrt(1 - h^2), so the population mean and covariance are
// preserved. h = 1 degenerates to an independence draw from N(mean, Sigma).
// The proposal is asymmetric, hence the forward and reverse densities.
inline LwProposal lw_propose(const Eigen::VectorXd& theta, double h,
                             const WeightedMoments& moments, Rng& rng) {
  if (!(h > 0.0) || h > 1.0) {
    throw InvalidScaling("lw_propose: h must lie in (0, 1]");
  }
  const double alpha = std::sqrt(1.0 - h * h);
  LwProposal out;
  const Eigen::VectorXd fwd_mean =
      alpha * theta + (1.0 - alpha) * moments.mean;
  out.draw = fwd_mean +
             h * (moments.chol_lower * draw_normal_vector(rng, theta.size()));
  out.log_fwd =
      detail::mvn_logpdf_chol(out.draw, fwd_mean, moments.chol_lower, h);
  const Eigen::VectorXd rev_mean =
      alpha * out.draw + (1.0 - alpha) * moments.mean;
  out.log_rev =
      detail::mvn_logpdf_chol(theta, rev_mean, moments.chol_lower, h);
  return out;
}

// Squared Mahalanobis distance under the population covariance.
inline double esjd(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                   const WeightedMoments& moments) {
  if (a.size() != b.size() || a.size() != moments.chol_lower.rows()) {
    throw DimensionMismatch("esjd: vector / covariance dimensions");
  }
  const Eigen::VectorXd z =
      moments.chol_lower.triangularView<Eigen::Lower>().solve(a - b);
  return z.squaredNorm();
}

// One Metropolis-Hastings step. A non-finite log target at the proposal is
// treated as certain rejection; the current state must be valid. The accept
// uniform is always consumed so draw counts do not depend on the outcome.
template <typename LogTarget>
MoveRecord mh_step(const Eigen::VectorXd& theta, LogTarget&& log_target,
                   const KernelSpec& kernel, const WeightedMoments& moments,
                   Rng& rng) {
  const double lp_cur = log_target(theta);
  if (!std::isfinite(lp_cur)) {
    throw TargetEvaluationFailure("mh_step: log target not finite at state");
  }
  MoveRecord rec;
  rec.theta_prev = theta;
  double log_fwd = 0.0;
  double log_rev = 0.0;
  if (kernel.kind == KernelSpec::Kind::RandomWalk) {
    rec.theta_proposed = rw_propose(theta, kernel.h, moments, rng);
  } else {
    LwProposal p = lw_propose(theta, kernel.h, moments, rng);
    rec.theta_proposed = std::move(p.draw);
    log_fwd = p.log_fwd;
    log_rev = p.log_rev;
  }
  const double lp_prop = log_target(rec.theta_proposed);
  if (std::isfinite(lp_prop)) {
    const double log_ratio = lp_prop - lp_cur + log_rev - log_fwd;
    rec.acc_prob = std::exp(std::min(log_ratio, 0.0));
  }
  rec.lambda = esjd(theta, rec.theta_proposed, moments);
  rec.lambda_tilde = rec.acc_prob * rec.lambda;
  rec.accepted = draw_uniform(rng) < rec.acc_prob;
  rec.theta_next = rec.accepted ? rec.theta_proposed : theta;
  return rec;
}

}  // namespace asmc
