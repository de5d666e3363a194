#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace asmc {

using Rng = std::mt19937_64;

// Stream tags: a run derives independent substreams from one root seed, so
// extra draws on one stream never shift another (e.g. the adaptation stream
// leaves particle dynamics untouched).
namespace stream {
inline constexpr std::uint64_t dynamics = 0x01;
inline constexpr std::uint64_t adaptation = 0x02;
inline constexpr std::uint64_t data = 0x03;
inline constexpr std::uint64_t shuffle = 0x04;
inline constexpr std::uint64_t run = 0x05;
}  // namespace stream

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  return splitmix64(splitmix64(root) ^ splitmix64(~tag));
}

inline Rng make_rng(std::uint64_t root, std::uint64_t tag) {
  return Rng(derive_seed(root, tag));
}

inline double draw_uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double draw_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Eigen::VectorXd draw_normal_vector(Rng& rng, Eigen::Index d) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = z(rng);
  return out;
}

// Uniform over {0, ..., n-1}.
inline int draw_index(Rng& rng, int n) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

}  // namespace asmc
