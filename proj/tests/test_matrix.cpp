#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "powalloc/matrix.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

using namespace powalloc;
using test_support::rel_err;

namespace {

double reconstruction_error(const SymMatrix& m, const EigenDecomposition& dec) {
  const int n = m.dim();
  double err = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < n; ++l)
        s += dec.eigenvectors(i, l) * dec.eigenvalues[l] * dec.eigenvectors(j, l);
      err += (s - m(i, j)) * (s - m(i, j));
    }
  return std::sqrt(err);
}

double residual_vs_identity(const SymMatrix& m, const SymMatrix& inv) {
  const Matrix prod = m.dense() * inv.dense();
  double err = 0.0;
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) {
      const double want = i == j ? 1.0 : 0.0;
      err += (prod(i, j) - want) * (prod(i, j) - want);
    }
  return std::sqrt(err);
}

}  // namespace

TEST_CASE("sym_eigen on identity and diagonal matrices") {
  const EigenDecomposition id = sym_eigen(SymMatrix::identity(2));
  CHECK(id.eigenvalues[0] == Catch::Approx(1.0).margin(1e-14));
  CHECK(id.eigenvalues[1] == Catch::Approx(1.0).margin(1e-14));

  const EigenDecomposition d = sym_eigen(SymMatrix::diagonal({3.0, 7.0}));
  CHECK(d.eigenvalues[0] == Catch::Approx(3.0).margin(1e-14));
  CHECK(d.eigenvalues[1] == Catch::Approx(7.0).margin(1e-14));
}

TEST_CASE("sym_eigen matches the 2x2 quadratic-formula oracle") {
  const auto expected = oracles::eig2_sym(2.0, 1.0, 2.0);
  REQUIRE(expected[0] == Catch::Approx(1.0));  // characteristic polynomial by hand
  REQUIRE(expected[1] == Catch::Approx(3.0));

  const EigenDecomposition dec = sym_eigen(SymMatrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(dec.eigenvalues[0] == Catch::Approx(expected[0]).margin(1e-12));
  CHECK(dec.eigenvalues[1] == Catch::Approx(expected[1]).margin(1e-12));

  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const SymMatrix m = test_support::random_symmetric(gen, 2, 5.0);
    const auto want = oracles::eig2_sym(m(0, 0), m(0, 1), m(1, 1));
    const EigenDecomposition got = sym_eigen(m);
    CHECK(rel_err(got.eigenvalues[0], want[0]) < 1e-12);
    CHECK(rel_err(got.eigenvalues[1], want[1]) < 1e-12);
  }
}

TEST_CASE("sym_eigen reconstructs random symmetric matrices") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 9);
    const SymMatrix m = test_support::random_symmetric(gen, n, 3.0);
    const EigenDecomposition dec = sym_eigen(m);
    REQUIRE(std::is_sorted(dec.eigenvalues.begin(), dec.eigenvalues.end()));
    CHECK(reconstruction_error(m, dec) <= 1e-9 * std::max(1.0, m.frobenius_norm()));

    // orthonormal eigenvector columns
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += dec.eigenvectors(i, a) * dec.eigenvectors(i, b);
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
  }
}

TEST_CASE("sym_eigen rejects non-finite input") {
  Matrix m(2, 2);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(SymMatrix::from_dense(m), domain_error);
}

TEST_CASE("SymMatrix symmetrization warns beyond the tolerance") {
  Matrix m(2, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(1, 0) = 2.1;
  m(1, 1) = 1.0;
  bool warned = false;
  const SymMatrix s = SymMatrix::from_dense(m, &warned);
  CHECK(warned);
  CHECK(s(0, 1) == Catch::Approx(2.05));
  CHECK(s(1, 0) == Catch::Approx(2.05));

  bool warned_clean = true;
  SymMatrix::from_rows({{1, 2}, {2, 1}}, &warned_clean);
  CHECK_FALSE(warned_clean);
}

TEST_CASE("sym_inverse on easy cases and the adjugate oracle") {
  const SymMatrix id_inv = sym_inverse(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(id_inv(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-13));

  const SymMatrix d_inv = sym_inverse(SymMatrix::diagonal({2.0, 4.0}));
  CHECK(d_inv(0, 0) == Catch::Approx(0.5).margin(1e-13));
  CHECK(d_inv(1, 1) == Catch::Approx(0.25).margin(1e-13));

  // adjugate of [[2,1],[1,2]] is (1/3)[[2,-1],[-1,2]]
  const SymMatrix m = SymMatrix::from_rows({{2, 1}, {1, 2}});
  const SymMatrix inv = sym_inverse(m);
  CHECK(inv(0, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(inv(0, 1) == Catch::Approx(-1.0 / 3.0).margin(1e-12));
  CHECK(inv(1, 1) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(residual_vs_identity(m, inv) <= 1e-8 * m.dim());
}

TEST_CASE("sym_inverse residual stays within contract on random matrices") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 9);
    const SymMatrix m = test_support::random_pd(gen, n);
    CHECK(residual_vs_identity(m, sym_inverse(m)) <= 1e-8 * n);
  }
}

TEST_CASE("sym_inverse reports the offending eigenvalue for singular input") {
  const SymMatrix singular = SymMatrix::from_rows({{1, 1}, {1, 1}});
  try {
    sym_inverse(singular);
    FAIL("expected singular_matrix_error");
  } catch (const singular_matrix_error& e) {
    CHECK(std::abs(e.min_abs_eigenvalue) < 1e-12);
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }
}

TEST_CASE("schur_reduce on a block-diagonal matrix inverts the top block") {
  SymMatrix m(4);
  m.set(0, 0, 2.0);
  m.set(0, 1, 1.0);
  m.set(1, 1, 2.0);
  m.set(2, 2, 5.0);
  m.set(3, 3, 4.0);
  const SymMatrix top_inv = schur_reduce(m, 2);
  CHECK(top_inv(0, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(top_inv(0, 1) == Catch::Approx(-1.0 / 3.0).margin(1e-12));
}

TEST_CASE("schur_reduce of [[2,1],[1,2]] with r=1 is the scalar complement") {
  const SymMatrix m = SymMatrix::from_rows({{2, 1}, {1, 2}});
  const SymMatrix red = schur_reduce(m, 1);
  // 1 / (2 - 1/2) = 2/3 by hand
  CHECK(red(0, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("schur_reduce equals the leading block of the full inverse") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(gen() % 8);
    const int r = 1 + static_cast<int>(gen() % (n - 1));
    const SymMatrix m = test_support::random_pd(gen, n);
    const SymMatrix red = schur_reduce(m, r);
    const SymMatrix full = sym_inverse(m);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        num += (red(i, j) - full(i, j)) * (red(i, j) - full(i, j));
        den += full(i, j) * full(i, j);
      }
    CHECK(std::sqrt(num) <= 1e-8 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("schur_reduce rejects a singular trailing block") {
  SymMatrix m(3);
  m.set(0, 0, 1.0);
  // trailing 2x2 block all ones -> singular
  m.set(1, 1, 1.0);
  m.set(1, 2, 1.0);
  m.set(2, 2, 1.0);
  CHECK_THROWS_AS(schur_reduce(m, 1), singular_matrix_error);
  CHECK_THROWS_AS(schur_reduce(m, 0), domain_error);
  CHECK_THROWS_AS(schur_reduce(m, 3), domain_error);
}

TEST_CASE("eigenvalue product bounds hold for power-scaled information matrices") {
  // For diagonal G = P^2 (positive) and symmetric positive definite T = J,
  // the extreme eigenvalues of the product bound those of P J P.
  std::mt19937_64 gen(19);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 9);
    const std::vector<double> p2 = test_support::random_positive_vector(gen, n, 0.05, 3.0);
    const SymMatrix j = test_support::random_pd(gen, n);

    std::vector<double> sqrt_p(n);
    for (int i = 0; i < n; ++i) sqrt_p[i] = std::sqrt(p2[i]);
    const EigenDecomposition prod = sym_eigen(diag_congruence(j, sqrt_p));
    const EigenDecomposition jd = sym_eigen(j);
    const auto [p_min, p_max] = std::minmax_element(p2.begin(), p2.end());

    const double lo = *p_min * jd.min_eigenvalue();
    const double hi = *p_max * jd.max_eigenvalue();
    const double slack_lo = 1e-12 * std::max(1.0, std::abs(lo));
    const double slack_hi = 1e-12 * std::max(1.0, std::abs(hi));
    REQUIRE(lo <= prod.min_eigenvalue() + slack_lo);
    REQUIRE(prod.max_eigenvalue() <= hi + slack_hi);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("diag_congruence scales entries pairwise") {
  const SymMatrix j = SymMatrix::from_rows({{2, 1}, {1, 4}});
  const SymMatrix s = diag_congruence(j, {2.0, 3.0});
  CHECK(s(0, 0) == Catch::Approx(8.0));
  CHECK(s(0, 1) == Catch::Approx(6.0));
  CHECK(s(1, 1) == Catch::Approx(36.0));
}
