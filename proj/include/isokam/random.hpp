#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace isokam {

using Rng = std::mt19937_64;

// Stream splitting rule: shard k of a computation seeded with `seed` uses
// Rng(split_seed(seed, k)). splitmix64 finalizer over seed + golden * (k+1).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Eigen::VectorXd uniform_sphere_point(int ambient, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(ambient);
  double n2 = 0.0;
  do {
    for (int i = 0; i < ambient; ++i) v(i) = normal(rng);
    n2 = v.squaredNorm();
  } while (n2 < 1e-20);
  return v / std::sqrt(n2);
}

}  // namespace isokam
