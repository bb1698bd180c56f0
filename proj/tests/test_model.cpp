#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "powalloc/model.hpp"
#include "powalloc/quadrature.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

using namespace powalloc;
using test_support::rel_err;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarDensity gaussian_density(double variance) {
  return {[variance](double x) { return -0.5 * x * x / variance - 0.5 * std::log(2.0 * kPi * variance); },
          [variance](double x) { return -x / variance; },
          -40.0 * std::sqrt(variance), 40.0 * std::sqrt(variance)};
}

ScalarDensity laplace_density(double scale) {
  return {[scale](double x) { return -std::abs(x) / scale - std::log(2.0 * scale); },
          [scale](double x) { return (x > 0 ? -1.0 : x < 0 ? 1.0 : 0.0) / scale; },
          -40.0 * scale, 40.0 * scale};
}

}  // namespace

TEST_CASE("noise_fim for diagonal Gaussian noise is the inverse covariance") {
  const SymMatrix in = noise_fim(NoiseModel::gaussian_diagonal({1.0, 4.0}), 2);
  CHECK(in(0, 0) == Catch::Approx(1.0));
  CHECK(in(1, 1) == Catch::Approx(0.25));
  CHECK(in(0, 1) == Catch::Approx(0.0));
}

TEST_CASE("noise_fim by quadrature matches the Gaussian closed form") {
  // scalar Gaussian Fisher information under translation is 1/variance
  const SymMatrix in = noise_fim(NoiseModel::independent_densities({gaussian_density(1.0)}), 1);
  CHECK(std::abs(in(0, 0) - 1.0) < 1e-6);
}

TEST_CASE("noise_fim by quadrature matches the Laplace closed form") {
  // scalar Laplace Fisher information under translation is 1/scale^2
  const SymMatrix in = noise_fim(NoiseModel::independent_densities({laplace_density(1.0)}), 1);
  CHECK(std::abs(in(0, 0) - 1.0) < 1e-4);
}

TEST_CASE("Gaussian fast path equals the quadrature path") {
  const std::vector<double> variances{0.5, 1.0, 2.5};
  std::vector<ScalarDensity> densities;
  for (double v : variances) densities.push_back(gaussian_density(v));
  const SymMatrix fast = noise_fim(NoiseModel::gaussian_diagonal(variances), 3);
  const SymMatrix slow = noise_fim(NoiseModel::independent_densities(densities), 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(fast(i, i) - slow(i, i)) < 1e-5);
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS(NoiseModel::gaussian_diagonal({1.0, 0.0}), domain_error);
  CHECK_THROWS_AS(NoiseModel::gaussian_diagonal({1.0, -2.0}), domain_error);
  CHECK_THROWS_AS(noise_fim(NoiseModel::gaussian_diagonal({1.0}), 2), domain_error);
  // indefinite matrix is not a valid FIM
  CHECK_THROWS_AS(NoiseModel::custom_fim(SymMatrix::from_rows({{1, 2}, {2, 1}})), domain_error);

  const SymMatrix fim = SymMatrix::from_rows({{2, 0.5}, {0.5, 3}});
  const SymMatrix back = noise_fim(NoiseModel::custom_fim(fim), 2);
  CHECK(back(0, 1) == Catch::Approx(0.5));
}

TEST_CASE("quadrature reports non-convergence with the achieved residual") {
  // infinitely oscillatory integrand: the subinterval budget runs out first
  const auto nasty = [](double x) { return x == 0.0 ? 0.0 : std::sin(1.0 / x); };
  try {
    integrate_adaptive_simpson(nasty, 1e-9, 1.0, 1e-12, 1 << 12);
    FAIL("expected integration_error");
  } catch (const integration_error& e) {
    CHECK(e.residual > 1e-12);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("effective_channel returns the linear channel as-is") {
  const SystemModel model =
      SystemModel::linear(Matrix::identity(3), NoiseModel::gaussian_diagonal({1, 1, 1}));
  const Matrix f = effective_channel(model);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(f(i, j) == Catch::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("effective_channel of the squaring map at (1, 2)") {
  NonlinearMap map;
  map.map = [](const std::vector<double>& phi) {
    return std::vector<double>{phi[0] * phi[0], phi[1] * phi[1]};
  };
  map.linearization_point = {1.0, 2.0};
  const SystemModel model =
      SystemModel::nonlinear(map, 2, 2, NoiseModel::gaussian_diagonal({1, 1}));
  const Matrix f = effective_channel(model);

  // analytic partials: d f_j / d phi_i, diagonal 2 phi_i
  CHECK(std::abs(f(0, 0) - 2.0) < 1e-6);
  CHECK(std::abs(f(1, 1) - 4.0) < 1e-6);
  CHECK(std::abs(f(0, 1)) < 1e-6);
  CHECK(std::abs(f(1, 0)) < 1e-6);

  const auto fd = oracles::fd_jacobian(map.map, map.linearization_point, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(f(i, j) - fd[i][j]) < 1e-6);
}

TEST_CASE("analytic and finite-difference Jacobians agree on a smooth map") {
  const auto smooth = [](const std::vector<double>& phi) {
    return std::vector<double>{std::exp(0.3 * phi[0] + 0.1 * phi[1]),
                               std::sin(phi[0] - 0.5 * phi[1]),
                               phi[0] * phi[1] + phi[1] * phi[1]};
  };
  NonlinearMap analytic;
  analytic.map = smooth;
  analytic.jacobian = [](const std::vector<double>& phi) {
    Matrix j(2, 3);
    j(0, 0) = 0.3 * std::exp(0.3 * phi[0] + 0.1 * phi[1]);
    j(1, 0) = 0.1 * std::exp(0.3 * phi[0] + 0.1 * phi[1]);
    j(0, 1) = std::cos(phi[0] - 0.5 * phi[1]);
    j(1, 1) = -0.5 * std::cos(phi[0] - 0.5 * phi[1]);
    j(0, 2) = phi[1];
    j(1, 2) = phi[0] + 2.0 * phi[1];
    return j;
  };
  analytic.linearization_point = {0.7, -0.4};

  NonlinearMap fd = analytic;
  fd.jacobian = nullptr;

  const NoiseModel noise = NoiseModel::gaussian_diagonal({1, 1, 1});
  const Matrix fa = effective_channel(SystemModel::nonlinear(analytic, 2, 3, noise));
  const Matrix fn = effective_channel(SystemModel::nonlinear(fd, 2, 3, noise));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(fa(i, j) - fn(i, j)) < 1e-5);
}

TEST_CASE("rank validation") {
  Matrix bad(2, 2);
  bad(0, 0) = 1.0;
  bad(0, 1) = 1.0;
  bad(1, 0) = 1.0;
  bad(1, 1) = 1.0;
  CHECK_THROWS_AS(SystemModel::linear(bad, NoiseModel::gaussian_diagonal({1, 1})), rank_error);

  // squaring map has a singular Jacobian wherever a coordinate is zero
  NonlinearMap map;
  map.map = [](const std::vector<double>& phi) {
    return std::vector<double>{phi[0] * phi[0], phi[1] * phi[1]};
  };
  map.linearization_point = {0.0, 1.0};
  const SystemModel model =
      SystemModel::nonlinear(map, 2, 2, NoiseModel::gaussian_diagonal({1, 1}));
  CHECK_THROWS_AS(effective_channel(model), rank_error);
}

TEST_CASE("model shape validation") {
  CHECK_THROWS_AS(SystemModel::linear(Matrix(3, 2), NoiseModel::gaussian_diagonal({1, 1})),
                  domain_error);  // k > n
  CHECK_THROWS_AS(
      SystemModel::linear(Matrix::identity(2), NoiseModel::gaussian_diagonal({1, 1, 1})),
      domain_error);  // noise dim != n
  CHECK_THROWS_AS(
      SystemModel::linear(Matrix::identity(2), NoiseModel::gaussian_diagonal({1, 1}), 2),
      domain_error);  // nuisance_count >= k
  const SystemModel linear =
      SystemModel::linear(Matrix::identity(2), NoiseModel::gaussian_diagonal({1, 1}));
  CHECK_THROWS_AS(linear.with_linearization_point({1, 2}), domain_error);
}

TEST_CASE("build_fim_bundle on the identity model") {
  const FimBundle bundle = build_fim_bundle(
      SystemModel::linear(Matrix::identity(2), NoiseModel::gaussian_diagonal({1, 1})));
  for (int i = 0; i < 2; ++i) {
    CHECK(bundle.j_diag[i] == Catch::Approx(1.0));
    CHECK(bundle.a_diag[i] == Catch::Approx(1.0));
  }
  CHECK(bundle.J(0, 1) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("build_fim_bundle on a diagonal channel") {
  Matrix f(2, 2);
  f(0, 0) = 2.0;
  f(1, 1) = 3.0;
  const FimBundle bundle =
      build_fim_bundle(SystemModel::linear(f, NoiseModel::gaussian_diagonal({1, 1})));
  CHECK(bundle.j_diag[0] == Catch::Approx(4.0));
  CHECK(bundle.j_diag[1] == Catch::Approx(9.0));
  CHECK(bundle.a_diag[0] == Catch::Approx(0.25));
  CHECK(bundle.a_diag[1] == Catch::Approx(1.0 / 9.0));
}

TEST_CASE("build_fim_bundle matches an independently scripted J for the F2-style channel") {
  // k = 2 variant of the numerical-experiment channel, assembled by hand:
  // V = [[1, 1], [1, 1.5]], kappa = sqrt(2)/sqrt(5.25), F = I + kappa V^T
  const double kappa = std::sqrt(2.0) / std::sqrt(1.0 + 1.0 + 1.0 + 2.25);
  std::vector<std::vector<double>> f_rows{{1.0 + kappa * 1.0, kappa * 1.0},
                                          {kappa * 1.0, 1.0 + kappa * 1.5}};
  const std::vector<double> variances{1e-7, 1e-4};
  const auto j_ref = oracles::brute_fim(f_rows, variances);

  Matrix f(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) f(i, j) = f_rows[i][j];
  const FimBundle bundle =
      build_fim_bundle(SystemModel::linear(f, NoiseModel::gaussian_diagonal(variances)));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(rel_err(bundle.J(i, j), j_ref[i][j]) < 1e-10);
}

TEST_CASE("bundle inverse satisfies the contract on random models") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(gen() % 6);
    const int n = k + static_cast<int>(gen() % 3);
    const FimBundle bundle = build_fim_bundle(test_support::random_gaussian_model(gen, k, n));
    const Matrix prod = bundle.J.dense() * bundle.A.dense();
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-7);
    for (double a : bundle.a_diag) CHECK(a >= 0.0);
  }
}

TEST_CASE("nuisance partition: reduced blocks match the full inverse") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + static_cast<int>(gen() % 6);
    const int s = 1 + static_cast<int>(gen() % std::min(3, k - 1));
    const int r = k - s;
    const FimBundle bundle =
        build_fim_bundle(test_support::random_gaussian_model(gen, k, k + 1, s));
    REQUIRE(bundle.reduced.has_value());
    const SymMatrix& a_rel = bundle.reduced->A_relevant;
    const SymMatrix& j_rel = bundle.reduced->J_relevant;
    REQUIRE(a_rel.dim() == r);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        num += (a_rel(i, j) - bundle.A(i, j)) * (a_rel(i, j) - bundle.A(i, j));
        den += bundle.A(i, j) * bundle.A(i, j);
        CHECK(j_rel(i, j) == Catch::Approx(bundle.J(i, j)));
      }
    CHECK(std::sqrt(num) <= 1e-8 * std::max(1.0, std::sqrt(den)));

    const FimBundle view = bundle.reduced_view();
    CHECK(view.schur_reduced);
    CHECK(view.dim() == r);
    CHECK(view.a_diag == a_rel.diag());
    CHECK(view.j_diag == j_rel.diag());
  }
}

TEST_CASE("reduced_view requires a nuisance partition") {
  const FimBundle bundle = build_fim_bundle(
      SystemModel::linear(Matrix::identity(2), NoiseModel::gaussian_diagonal({1, 1})));
  CHECK_FALSE(bundle.reduced.has_value());
  CHECK_THROWS_AS(bundle.reduced_view(), domain_error);
}
