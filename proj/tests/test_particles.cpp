#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "asmc/errors.hpp"
#include "asmc/particles.hpp"
#include "asmc/random.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> multiplicities(const std::vector<int>& idx, int m) {
  std::vector<int> counts(static_cast<std::size_t>(m), 0);
  for (int i : idx) counts[static_cast<std::size_t>(i)]++;
  return counts;
}

}  // namespace

TEST_CASE("normalize_log_weights handles equal, degenerate, and skewed input") {
  SECTION("two zeros normalize to a half each with log-constant log 2") {
    Eigen::VectorXd lw(2);
    lw << 0.0, 0.0;
    const auto [w, log_z] = asmc::normalize_log_weights(lw);
    CHECK(w[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(w[1] == Catch::Approx(0.5).margin(1e-15));
    CHECK(log_z == Catch::Approx(std::log(2.0)).margin(1e-12));
  }
  SECTION("minus infinity drops out of the support") {
    Eigen::VectorXd lw(2);
    lw << -kInf, 0.0;
    const auto [w, log_z] = asmc::normalize_log_weights(lw);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
    CHECK(log_z == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("log 1 and log 3 give quarter and three-quarters, constant log 4") {
    Eigen::VectorXd lw(2);
    lw << std::log(1.0), std::log(3.0);
    const auto [w, log_z] = asmc::normalize_log_weights(lw);
    CHECK(w[0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(w[1] == Catch::Approx(0.75).margin(1e-12));
    CHECK(log_z == Catch::Approx(std::log(4.0)).margin(1e-12));
  }
  SECTION("all minus infinity throws") {
    Eigen::VectorXd lw(3);
    lw << -kInf, -kInf, -kInf;
    CHECK_THROWS_AS(asmc::normalize_log_weights(lw),
                    asmc::AllWeightsDegenerate);
  }
  SECTION("large common offset does not overflow") {
    Eigen::VectorXd lw(2);
    lw << 1000.0, 1000.0 + std::log(3.0);
    const auto [w, log_z] = asmc::normalize_log_weights(lw);
    CHECK(w[0] == Catch::Approx(0.25).margin(1e-12));
    CHECK(log_z == Catch::Approx(1000.0 + std::log(4.0)).margin(1e-9));
  }
}

TEST_CASE("ess matches hand values") {
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  CHECK(asmc::ess(w) == Catch::Approx(2.0).margin(1e-12));
  w << 1.0, 0.0;
  CHECK(asmc::ess(w) == Catch::Approx(1.0).margin(1e-12));
  w << 0.7, 0.3;
  CHECK(asmc::ess(w) == Catch::Approx(1.72414).margin(1e-5));
}

TEST_CASE("ess of uniform weights is the particle count") {
  // Power-of-two counts make 1/M exactly representable, so equality is exact;
  // other counts agree to accumulated rounding.
  for (int m : {1, 2, 64, 4096}) {
    const Eigen::VectorXd w =
        Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    CHECK(asmc::ess(w) == static_cast<double>(m));
  }
  for (int m : {7, 100, 2000}) {
    const Eigen::VectorXd w =
        Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    CHECK(asmc::ess(w) ==
          Catch::Approx(static_cast<double>(m)).epsilon(1e-12));
  }
}

TEST_CASE("ess is invariant to weight permutation") {
  asmc::Rng rng = asmc::make_rng(7, 0x51);
  Eigen::VectorXd w(6);
  for (int i = 0; i < 6; ++i) w[i] = asmc::draw_uniform(rng) + 0.01;
  w /= w.sum();
  const double base = asmc::ess(w);
  std::vector<int> perm{3, 1, 5, 0, 4, 2};
  Eigen::VectorXd shuffled(6);
  for (int i = 0; i < 6; ++i) shuffled[i] = w[perm[static_cast<std::size_t>(i)]];
  CHECK(asmc::ess(shuffled) == Catch::Approx(base).margin(1e-14));
}

TEST_CASE("multinomial_resample point mass and frequency behavior") {
  SECTION("point mass maps every draw to the supported index") {
    Eigen::VectorXd w(3);
    w << 1.0, 0.0, 0.0;
    asmc::Rng rng = asmc::make_rng(11, 0x52);
    const auto idx = asmc::multinomial_resample(w, 5, rng);
    REQUIRE(idx.size() == 5);
    for (int i : idx) CHECK(i == 0);
  }
  SECTION("uniform weights over four indices give quarter frequencies") {
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
    asmc::Rng rng = asmc::make_rng(13, 0x52);
    const int n = 100000;
    const auto idx = asmc::multinomial_resample(w, n, rng);
    const auto counts = multiplicities(idx, 4);
    for (int c : counts) {
      CHECK(static_cast<double>(c) / n == Catch::Approx(0.25).margin(0.005));
    }
  }
  SECTION("fixed seed reproduces the index sequence") {
    Eigen::VectorXd w(5);
    w << 0.1, 0.3, 0.2, 0.25, 0.15;
    asmc::Rng a = asmc::make_rng(17, 0x52);
    asmc::Rng b = asmc::make_rng(17, 0x52);
    CHECK(asmc::multinomial_resample(w, 64, a) ==
          asmc::multinomial_resample(w, 64, b));
  }
}

TEST_CASE("residual_resample floors multiplicities deterministically") {
  SECTION("integer expected counts are hit exactly") {
    Eigen::VectorXd w(3);
    w << 0.5, 0.25, 0.25;
    asmc::Rng rng = asmc::make_rng(19, 0x52);
    const auto idx = asmc::residual_resample(w, 4, rng);
    const auto counts = multiplicities(idx, 3);
    CHECK(counts == std::vector<int>{2, 1, 1});
  }
  SECTION("point mass maps all draws to index zero") {
    Eigen::VectorXd w(2);
    w << 1.0, 0.0;
    asmc::Rng rng = asmc::make_rng(23, 0x52);
    const auto idx = asmc::residual_resample(w, 3, rng);
    CHECK(idx == std::vector<int>{0, 0, 0});
  }
  SECTION("every index appears at least floor(count * weight) times") {
    asmc::Rng rng = asmc::make_rng(29, 0x52);
    for (int trial = 0; trial < 50; ++trial) {
      Eigen::VectorXd w(6);
      for (int i = 0; i < 6; ++i) w[i] = asmc::draw_uniform(rng) + 1e-3;
      w /= w.sum();
      const int count = 37;
      const auto idx = asmc::residual_resample(w, count, rng);
      REQUIRE(static_cast<int>(idx.size()) == count);
      const auto counts = multiplicities(idx, 6);
      for (int j = 0; j < 6; ++j) {
        CHECK(counts[static_cast<std::size_t>(j)] >=
              static_cast<int>(std::floor(count * w[j])));
      }
    }
  }
}

TEST_CASE("resampled index frequencies match the weights at large count") {
  Eigen::VectorXd w(5);
  w << 0.05, 0.35, 0.1, 0.3, 0.2;
  const int n = 100000;
  // Chi-squared against expected counts; 4 dof, threshold at p = 0.001.
  const double chi2_cutoff = 18.47;
  SECTION("multinomial") {
    asmc::Rng rng = asmc::make_rng(31, 0x52);
    const auto counts = multiplicities(asmc::multinomial_resample(w, n, rng), 5);
    double chi2 = 0.0;
    for (int j = 0; j < 5; ++j) {
      const double expect = n * w[j];
      const double diff = counts[static_cast<std::size_t>(j)] - expect;
      chi2 += diff * diff / expect;
    }
    CHECK(chi2 < chi2_cutoff);
  }
  SECTION("residual") {
    asmc::Rng rng = asmc::make_rng(37, 0x52);
    const auto counts = multiplicities(asmc::residual_resample(w, n, rng), 5);
    double chi2 = 0.0;
    for (int j = 0; j < 5; ++j) {
      const double expect = n * w[j];
      const double diff = counts[static_cast<std::size_t>(j)] - expect;
      chi2 += diff * diff / expect;
    }
    CHECK(chi2 < chi2_cutoff);
  }
}

TEST_CASE("residual resampling has no more multiplicity variance than multinomial") {
  Eigen::VectorXd w(4);
  w << 0.4, 0.3, 0.2, 0.1;
  const int count = 50;
  const int trials = 1000;
  asmc::Rng rng = asmc::make_rng(41, 0x52);
  Eigen::MatrixXd multi(trials, 4), resid(trials, 4);
  for (int t = 0; t < trials; ++t) {
    const auto cm = multiplicities(asmc::multinomial_resample(w, count, rng), 4);
    const auto cr = multiplicities(asmc::residual_resample(w, count, rng), 4);
    for (int j = 0; j < 4; ++j) {
      multi(t, j) = cm[static_cast<std::size_t>(j)];
      resid(t, j) = cr[static_cast<std::size_t>(j)];
    }
  }
  for (int j = 0; j < 4; ++j) {
    const double vm =
        (multi.col(j).array() - multi.col(j).mean()).square().sum() / trials;
    const double vr =
        (resid.col(j).array() - resid.col(j).mean()).square().sum() / trials;
    CHECK(vr <= vm);
  }
}

TEST_CASE("weighted_moments hand values and regularization") {
  SECTION("two equal-weight points on a line") {
    Eigen::MatrixXd particles(2, 2);
    particles.col(0) << 0.0, 0.0;
    particles.col(1) << 2.0, 0.0;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(2, 0.5);
    const asmc::WeightedMoments m = asmc::weighted_moments(particles, w);
    CHECK(m.mean[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(m.mean[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(m.covariance(0, 0) == Catch::Approx(1.0).margin(1e-6));
    CHECK(m.covariance(0, 1) == Catch::Approx(0.0).margin(1e-8));
    CHECK(m.covariance(1, 1) == Catch::Approx(0.0).margin(1e-6));
    // The second coordinate is degenerate, so jitter must have been added.
    CHECK(m.regularized);
  }
  SECTION("a single repeated particle yields zero covariance, regularized") {
    Eigen::MatrixXd particles(3, 4);
    for (int j = 0; j < 4; ++j) particles.col(j) << 1.0, -2.0, 0.5;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(4, 0.25);
    const asmc::WeightedMoments m = asmc::weighted_moments(particles, w);
    CHECK(m.regularized);
    CHECK(m.covariance.norm() == Catch::Approx(0.0).margin(1e-6));
    CHECK((m.mean - particles.col(0)).norm() == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("standard-normal draws recover identity moments") {
    const int n = 10000;
    asmc::Rng rng = asmc::make_rng(43, 0x53);
    Eigen::MatrixXd particles(2, n);
    for (int j = 0; j < n; ++j) {
      particles.col(j) = asmc::draw_normal_vector(rng, 2);
    }
    const Eigen::VectorXd w =
        Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const asmc::WeightedMoments m = asmc::weighted_moments(particles, w);
    CHECK(m.mean.cwiseAbs().maxCoeff() < 0.05);
    const Eigen::MatrixXd err = m.covariance - Eigen::MatrixXd::Identity(2, 2);
    CHECK(err.cwiseAbs().maxCoeff() < 0.1);
  }
  SECTION("fewer than two particles is an error") {
    Eigen::MatrixXd particles(2, 1);
    particles.col(0) << 0.0, 0.0;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
    CHECK_THROWS_AS(asmc::weighted_moments(particles, w),
                    asmc::DimensionMismatch);
  }
}

TEST_CASE("weighted_moments is invariant under joint permutation") {
  asmc::Rng rng = asmc::make_rng(47, 0x53);
  const int m = 12;
  Eigen::MatrixXd particles(3, m);
  Eigen::VectorXd w(m);
  for (int j = 0; j < m; ++j) {
    particles.col(j) = asmc::draw_normal_vector(rng, 3);
    w[j] = asmc::draw_uniform(rng) + 0.01;
  }
  w /= w.sum();
  const asmc::WeightedMoments base = asmc::weighted_moments(particles, w);

  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 shuffler(991);
  std::shuffle(perm.begin(), perm.end(), shuffler);
  Eigen::MatrixXd pp(3, m);
  Eigen::VectorXd pw(m);
  for (int j = 0; j < m; ++j) {
    pp.col(j) = particles.col(perm[static_cast<std::size_t>(j)]);
    pw[j] = w[perm[static_cast<std::size_t>(j)]];
  }
  const asmc::WeightedMoments shuffled = asmc::weighted_moments(pp, pw);
  CHECK((base.mean - shuffled.mean).norm() < 1e-10);
  CHECK((base.covariance - shuffled.covariance).norm() < 1e-10);
}

TEST_CASE("moments covariance is symmetric and factorizable") {
  asmc::Rng rng = asmc::make_rng(53, 0x53);
  Eigen::MatrixXd particles(4, 30);
  for (int j = 0; j < 30; ++j) particles.col(j) = asmc::draw_normal_vector(rng, 4);
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(30, 1.0 / 30.0);
  const asmc::WeightedMoments m = asmc::weighted_moments(particles, w);
  const double rel =
      (m.covariance - m.covariance.transpose()).norm() / m.covariance.norm();
  CHECK(rel < 1e-10);
  const Eigen::MatrixXd recon = m.chol_lower * m.chol_lower.transpose();
  CHECK((recon - m.covariance).norm() < 1e-8 * std::max(1.0, m.covariance.norm()));
}
