// Shared helpers for the unit suites: random problem generators built on the
// standard mt19937_64 so they stay independent of the library RNG.
#ifndef POWALLOC_TESTS_TEST_SUPPORT_HPP
#define POWALLOC_TESTS_TEST_SUPPORT_HPP

#include <cmath>
#include <random>
#include <vector>

#include "powalloc/matrix.hpp"
#include "powalloc/model.hpp"

namespace test_support {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline powalloc::SymMatrix random_symmetric(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  powalloc::SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, u(gen));
  return m;
}

// M^T M + shift I: positive definite by construction.
inline powalloc::SymMatrix random_pd(std::mt19937_64& gen, int n, double shift = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  powalloc::Matrix m(n, n);
  for (double& v : m.data) v = u(gen);
  powalloc::Matrix g = m.transposed() * m;
  for (int i = 0; i < n; ++i) g(i, i) += shift;
  return powalloc::SymMatrix::from_dense(g);
}

inline std::vector<double> random_positive_vector(std::mt19937_64& gen, int n, double lo,
                                                  double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

// Well-conditioned random full-row-rank channel: identity plus a small random
// perturbation.
inline powalloc::Matrix random_channel(std::mt19937_64& gen, int k, int n) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  powalloc::Matrix f(k, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = (i == j ? 1.0 : 0.0) + u(gen);
  return f;
}

inline powalloc::SystemModel random_gaussian_model(std::mt19937_64& gen, int k, int n,
                                                   int nuisance = 0) {
  return powalloc::SystemModel::linear(
      random_channel(gen, k, n),
      powalloc::NoiseModel::gaussian_diagonal(random_positive_vector(gen, n, 0.2, 2.0)),
      nuisance);
}

}  // namespace test_support

#endif  // POWALLOC_TESTS_TEST_SUPPORT_HPP
