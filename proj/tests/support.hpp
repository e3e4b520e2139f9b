#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bsc/space.hpp"

namespace bsc::testing {

inline constexpr std::uint64_t kSeed = 20240611;

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline StateVector random_state(const HilbertSpace& space, std::mt19937_64& rng,
                                double scale = 1.0) {
  auto v = random_vector(rng, space.dim(), -scale, scale);
  return space.make_state(std::move(v));
}

/// Dense matrix of a linear map R^n -> R^n given by its action.
inline Eigen::MatrixXd dense_of(std::size_t n,
                                const std::function<std::vector<double>(const std::vector<double>&)>& op) {
  Eigen::MatrixXd a(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = op(e);
    for (std::size_t i = 0; i < n; ++i) a(i, j) = col[i];
    e[j] = 0.0;
  }
  return a;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

/// Dense-oracle V-norm: sqrt(v^T A^{-1} v) with A the inner operator matrix.
inline double dense_v_norm(const HilbertSpace& space, std::span<const double> v) {
  const auto a = dense_of(space.dim(), [&](const std::vector<double>& x) {
    return space.apply_inner_operator(x);
  });
  const Eigen::VectorXd b = to_eigen(std::vector<double>(v.begin(), v.end()));
  const Eigen::VectorXd r = a.ldlt().solve(b);
  return std::sqrt(b.dot(r));
}

}  // namespace bsc::testing
