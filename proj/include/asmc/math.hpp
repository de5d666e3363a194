#pragma once

#include <cmath>

#include <Eigen/Core>

namespace asmc {

inline constexpr double log_two_pi = 1.8378770664093454836;

inline double gaussian_logpdf(double x, double mean, double variance) {
  const double diff = x - mean;
  return -0.5 * (log_two_pi + std::log(variance) + diff * diff / variance);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace asmc
