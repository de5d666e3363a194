#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/math.hpp"
#include "asmc/random.hpp"

namespace asmc {

// Component orderings used to pin a labelling before moments are computed.
enum class Ordering { None, ByMeans, ByVariances };

// One-dimensional Gaussian mixture on the natural scale.
struct MixtureSpec {
  Eigen::VectorXd weights;    // p, sums to 1
  Eigen::VectorXd means;      // mu
  Eigen::VectorXd variances;  // v, positive
  int components() const { return static_cast<int>(weights.size()); }
};

inline double mixture_log_lik(const MixtureSpec& spec, double y) {
  const int r = spec.components();
  Eigen::VectorXd terms(r);
  for (int j = 0; j < r; ++j) {
    terms[j] = std::log(spec.weights[j]) +
               gaussian_logpdf(y, spec.means[j], spec.variances[j]);
  }
  return log_sum_exp(terms);
}

// Unconstrained parameterization, laid out as
//   theta = [ log(p_j / p_r) for j < r | log(v_j) for all j | mu_j for all j ]
// so dim = 3r - 1. The last component's weight is the reference.
inline Eigen::VectorXd transform(const MixtureSpec& spec) {
  const int r = spec.components();
  Eigen::VectorXd theta(3 * r - 1);
  for (int j = 0; j + 1 < r; ++j) {
    theta[j] = std::log(spec.weights[j] / spec.weights[r - 1]);
  }
  for (int j = 0; j < r; ++j) theta[r - 1 + j] = std::log(spec.variances[j]);
  for (int j = 0; j < r; ++j) theta[2 * r - 1 + j] = spec.means[j];
  return theta;
}

inline int mixture_components_from_dim(Eigen::Index dim) {
  const int r = static_cast<int>((dim + 1) / 3);
  if (r < 1 || 3 * r - 1 != dim) {
    throw DimensionMismatch("mixture parameter vector has no valid r");
  }
  return r;
}

inline MixtureSpec inverse_transform(const Eigen::VectorXd& theta) {
  const int r = mixture_components_from_dim(theta.size());
  MixtureSpec spec;
  Eigen::VectorXd logits = Eigen::VectorXd::Zero(r);
  for (int j = 0; j + 1 < r; ++j) logits[j] = theta[j];
  const double m = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - m).exp();
  spec.weights = w / w.sum();
  spec.variances = theta.segment(r - 1, r).array().exp();
  spec.means = theta.segment(2 * r - 1, r);
  return spec;
}

// Reorders mixture components by the requested key (stable on ties) and maps
// back to the unconstrained scale. Identity when ordering is None.
inline Eigen::VectorXd relabel(const Eigen::VectorXd& theta, Ordering ordering) {
  if (ordering == Ordering::None) return theta;
  const MixtureSpec spec = inverse_transform(theta);
  const int r = spec.components();
  std::vector<int> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& key =
      ordering == Ordering::ByMeans ? spec.means : spec.variances;
  std::stable_sort(order.begin(), order.end(),
                   [&key](int a, int b) { return key[a] < key[b]; });
  MixtureSpec sorted;
  sorted.weights.resize(r);
  sorted.means.resize(r);
  sorted.variances.resize(r);
  for (int j = 0; j < r; ++j) {
    sorted.weights[j] = spec.weights[order[static_cast<std::size_t>(j)]];
    sorted.means[j] = spec.means[order[static_cast<std::size_t>(j)]];
    sorted.variances[j] = spec.variances[order[static_cast<std::size_t>(j)]];
  }
  return transform(sorted);
}

// Independent priors on the unconstrained coordinates:
//   logits N(0, 1), log variances N(-1.5, 1.3^2), means N(0, 0.75^2).
inline double mixture_prior_logdensity(const Eigen::VectorXd& theta) {
  const int r = mixture_components_from_dim(theta.size());
  double lp = 0.0;
  for (int j = 0; j + 1 < r; ++j) lp += gaussian_logpdf(theta[j], 0.0, 1.0);
  for (int j = 0; j < r; ++j) {
    lp += gaussian_logpdf(theta[r - 1 + j], -1.5, 1.3 * 1.3);
  }
  for (int j = 0; j < r; ++j) {
    lp += gaussian_logpdf(theta[2 * r - 1 + j], 0.0, 0.75 * 0.75);
  }
  return lp;
}

inline Eigen::VectorXd sample_mixture_prior(Rng& rng, int r) {
  Eigen::VectorXd theta(3 * r - 1);
  for (int j = 0; j + 1 < r; ++j) theta[j] = draw_normal(rng);
  for (int j = 0; j < r; ++j) theta[r - 1 + j] = -1.5 + 1.3 * draw_normal(rng);
  for (int j = 0; j < r; ++j) theta[2 * r - 1 + j] = 0.75 * draw_normal(rng);
  return theta;
}

inline Eigen::MatrixXd mixture_prior_covariance(int r) {
  Eigen::VectorXd diag(3 * r - 1);
  for (int j = 0; j + 1 < r; ++j) diag[j] = 1.0;
  for (int j = 0; j < r; ++j) diag[r - 1 + j] = 1.3 * 1.3;
  for (int j = 0; j < r; ++j) diag[2 * r - 1 + j] = 0.75 * 0.75;
  return diag.asDiagonal();
}

// Benchmark mixtures; variances are stored, the table lists sds.
inline MixtureSpec dataset_spec(int k) {
  auto make = [](std::initializer_list<double> p, std::initializer_list<double> mu,
                 std::initializer_list<double> sd) {
    MixtureSpec s;
    const int r = static_cast<int>(p.size());
    s.weights.resize(r);
    s.means.resize(r);
    s.variances.resize(r);
    int j = 0;
    for (double v : p) s.weights[j++] = v;
    j = 0;
    for (double v : mu) s.means[j++] = v;
    j = 0;
    for (double v : sd) s.variances[j++] = v * v;
    return s;
  };
  switch (k) {
    case 1: return make({0.5, 0.5}, {-0.25, 0.25}, {0.5, 0.5});
    case 2: return make({0.5, 0.5}, {0.0, 0.0}, {1.0, 0.1});
    case 3: return make({0.3, 0.7}, {-1.0, 1.0}, {0.5, 0.5});
    case 4: return make({0.5, 0.5}, {-0.75, 0.75}, {0.1, 0.1});
    case 5: return make({0.35, 0.3, 0.35}, {-0.1, 0.0, 0.1}, {0.1, 0.5, 1.0});
    case 6: return make({0.25, 0.5, 0.25}, {-0.5, 0.0, 0.5}, {0.1, 0.2, 0.1});
    default: throw UnknownDataset("dataset_spec: dataset id out of range");
  }
}

inline std::vector<double> simulate_dataset(int k, int n, Rng& rng) {
  const MixtureSpec spec = dataset_spec(k);
  const int r = spec.components();
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = draw_uniform(rng);
    int j = 0;
    double cum = spec.weights[0];
    while (u > cum && j + 1 < r) {
      ++j;
      cum += spec.weights[j];
    }
    y[static_cast<std::size_t>(i)] =
        spec.means[j] + std::sqrt(spec.variances[j]) * draw_normal(rng);
  }
  return y;
}

// A posterior built up one observation at a time. `t` counts observations,
// so log_posterior_upto(theta, 0) is the prior.
class SequentialTarget {
 public:
  virtual ~SequentialTarget() = default;

  virtual int dim() const = 0;
  virtual int n_obs() const = 0;
  virtual double log_prior(const Eigen::VectorXd& theta) const = 0;
  virtual double log_lik_increment(const Eigen::VectorXd& theta, int t) const = 0;
  virtual double log_posterior_upto(const Eigen::VectorXd& theta, int t) const {
    double lp = log_prior(theta);
    for (int s = 1; s <= t; ++s) lp += log_lik_increment(theta, s);
    return lp;
  }
  virtual Eigen::VectorXd sample_prior(Rng& rng) const = 0;
  virtual Eigen::VectorXd relabel(const Eigen::VectorXd& theta,
                                  Ordering /*ordering*/) const {
    return theta;
  }
  // Density of one scalar future observation given theta.
  virtual double log_obs_density(const Eigen::VectorXd& theta,
                                 double y) const = 0;
  virtual Eigen::VectorXd obs_density_grid(const Eigen::VectorXd& theta,
                                           const Eigen::VectorXd& points) const {
    Eigen::VectorXd out(points.size());
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      out[i] = std::exp(log_obs_density(theta, points[i]));
    }
    return out;
  }
  virtual Eigen::MatrixXd prior_covariance() const = 0;
};

// Unknown mean of a d-dimensional unit-covariance Gaussian, prior
// N(0, prior_var I). Prefix sums make each posterior evaluation O(d).
class GaussianMeanTarget final : public SequentialTarget {
 public:
  GaussianMeanTarget(std::vector<Eigen::VectorXd> obs, double prior_var = 5.0,
                     int dim = 5)
      : obs_(std::move(obs)), prior_var_(prior_var), dim_(dim) {
    const std::size_t n = obs_.size();
    sum_y_.resize(n + 1);
    sum_sq_.resize(n + 1);
    sum_y_[0] = Eigen::VectorXd::Zero(dim_);
    sum_sq_[0] = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (obs_[t].size() != dim_) {
        throw DimensionMismatch("GaussianMeanTarget: observation dimension");
      }
      sum_y_[t + 1] = sum_y_[t] + obs_[t];
      sum_sq_[t + 1] = sum_sq_[t] + obs_[t].squaredNorm();
    }
  }

  int dim() const override { return dim_; }
  int n_obs() const override { return static_cast<int>(obs_.size()); }

  double log_prior(const Eigen::VectorXd& theta) const override {
    return -0.5 * (dim_ * (log_two_pi + std::log(prior_var_)) +
                   theta.squaredNorm() / prior_var_);
  }

  double log_lik_increment(const Eigen::VectorXd& theta, int t) const override {
    const Eigen::VectorXd& y = obs_[static_cast<std::size_t>(t - 1)];
    return -0.5 * (dim_ * log_two_pi + (y - theta).squaredNorm());
  }

  double log_posterior_upto(const Eigen::VectorXd& theta, int t) const override {
    const std::size_t s = static_cast<std::size_t>(t);
    const double quad = sum_sq_[s] - 2.0 * theta.dot(sum_y_[s]) +
                        t * theta.squaredNorm();
    return log_prior(theta) - 0.5 * (t * dim_ * log_two_pi + quad);
  }

  Eigen::VectorXd sample_prior(Rng& rng) const override {
    return std::sqrt(prior_var_) * draw_normal_vector(rng, dim_);
  }

  // Marginal of the first observation coordinate, N(y; theta_0, 1).
  double log_obs_density(const Eigen::VectorXd& theta, double y) const override {
    return gaussian_logpdf(y, theta[0], 1.0);
  }

  Eigen::MatrixXd prior_covariance() const override {
    return prior_var_ * Eigen::MatrixXd::Identity(dim_, dim_);
  }

  double prior_var() const { return prior_var_; }
  const std::vector<Eigen::VectorXd>& observations() const { return obs_; }

 private:
  std::vector<Eigen::VectorXd> obs_;
  double prior_var_;
  int dim_;
  std::vector<Eigen::VectorXd> sum_y_;
  std::vector<double> sum_sq_;
};

// Gaussian mixture with unknown weights, means and variances, handled on the
// unconstrained scale throughout.
class MixtureTarget final : public SequentialTarget {
 public:
  MixtureTarget(std::vector<double> obs, int components)
      : obs_(std::move(obs)), r_(components) {
    if (r_ < 1) throw DimensionMismatch("MixtureTarget: need >= 1 component");
  }

  int dim() const override { return 3 * r_ - 1; }
  int n_obs() const override { return static_cast<int>(obs_.size()); }
  int components() const { return r_; }

  double log_prior(const Eigen::VectorXd& theta) const override {
    return mixture_prior_logdensity(theta);
  }

  double log_lik_increment(const Eigen::VectorXd& theta, int t) const override {
    return mixture_log_lik(inverse_transform(theta),
                           obs_[static_cast<std::size_t>(t - 1)]);
  }

  double log_posterior_upto(const Eigen::VectorXd& theta, int t) const override {
    const MixtureSpec spec = inverse_transform(theta);
    double lp = mixture_prior_logdensity(theta);
    for (int s = 0; s < t; ++s) {
      lp += mixture_log_lik(spec, obs_[static_cast<std::size_t>(s)]);
    }
    return lp;
  }

  Eigen::VectorXd sample_prior(Rng& rng) const override {
    return sample_mixture_prior(rng, r_);
  }

  Eigen::VectorXd relabel(const Eigen::VectorXd& theta,
                          Ordering ordering) const override {
    return asmc::relabel(theta, ordering);
  }

  double log_obs_density(const Eigen::VectorXd& theta, double y) const override {
    return mixture_log_lik(inverse_transform(theta), y);
  }

  Eigen::VectorXd obs_density_grid(const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& points) const override {
    const MixtureSpec spec = inverse_transform(theta);
    Eigen::VectorXd out(points.size());
    for (Eigen::Index i = 0; i < points.size(); ++i) {
      out[i] = std::exp(mixture_log_lik(spec, points[i]));
    }
    return out;
  }

  Eigen::MatrixXd prior_covariance() const override {
    return mixture_prior_covariance(r_);
  }

  const std::vector<double>& observations() const { return obs_; }

 private:
  std::vector<double> obs_;
  int r_;
};

// Exact posterior for the Gaussian-mean model: with n observations,
// covariance (1/prior_var + n)^{-1} I and mean covariance * sum(y).
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> kalman_posterior(
    const std::vector<Eigen::VectorXd>& obs, double prior_var, int dim = 5) {
  Eigen::VectorXd sum_y = Eigen::VectorXd::Zero(dim);
  for (const auto& y : obs) {
    if (y.size() != dim) throw DimensionMismatch("kalman_posterior: dimension");
    sum_y += y;
  }
  const double precision = 1.0 / prior_var + static_cast<double>(obs.size());
  const double var = 1.0 / precision;
  return {var * sum_y, var * Eigen::MatrixXd::Identity(dim, dim)};
}

}  // namespace asmc
