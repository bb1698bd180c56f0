#ifndef POWALLOC_MATRIX_HPP
#define POWALLOC_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "powalloc/errors.hpp"

namespace powalloc {

/// Dense row-major matrix. Plain value type; no view semantics.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw domain_error("matrix product: inner dimensions do not match");
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int l = 0; l < a.cols; ++l) {
      const double ail = a(i, l);
      if (ail == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) c(i, j) += ail * b(l, j);
    }
  return c;
}

/// Symmetric matrix with checked invariants: square, finite entries, exact
/// symmetry of the stored representation. Construction from a dense matrix
/// symmetrizes (M + M^T)/2 and can report whether the asymmetry exceeded the
/// documented tolerance 1e-12 * max(1, |m_ij|).
class SymMatrix {
public:
  SymMatrix() = default;

  explicit SymMatrix(int dim) : dim_(dim), data_(static_cast<size_t>(dim) * dim, 0.0) {
    if (dim <= 0) throw domain_error("SymMatrix: dimension must be positive");
  }

  /// Symmetrize a dense square matrix. `asymmetry_warning`, when non-null, is
  /// set if the input violated the symmetry tolerance before symmetrization.
  static SymMatrix from_dense(const Matrix& m, bool* asymmetry_warning = nullptr) {
    if (m.rows != m.cols) throw domain_error("SymMatrix: input is not square");
    if (!m.all_finite()) throw domain_error("SymMatrix: non-finite entry");
    SymMatrix s(m.rows);
    bool warn = false;
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j) {
        const double a = m(i, j), b = m(j, i);
        if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) warn = true;
        s.data_[static_cast<size_t>(i) * m.rows + j] = 0.5 * (a + b);
      }
    if (asymmetry_warning) *asymmetry_warning = warn;
    return s;
  }

  static SymMatrix from_rows(const std::vector<std::vector<double>>& rows,
                             bool* asymmetry_warning = nullptr) {
    const int n = static_cast<int>(rows.size());
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n)
        throw domain_error("SymMatrix: ragged row data");
      for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return from_dense(m, asymmetry_warning);
  }

  static SymMatrix identity(int n) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
  }

  static SymMatrix diagonal(const std::vector<double>& d) {
    SymMatrix s(static_cast<int>(d.size()));
    for (int i = 0; i < s.dim_; ++i) {
      if (!std::isfinite(d[i])) throw domain_error("SymMatrix: non-finite diagonal entry");
      s.set(i, i, d[i]);
    }
    return s;
  }

  int dim() const { return dim_; }

  double operator()(int i, int j) const {
    return data_[static_cast<size_t>(i) * dim_ + j];
  }

  /// Sets the (i,j) and (j,i) entries.
  void set(int i, int j, double v) {
    data_[static_cast<size_t>(i) * dim_ + j] = v;
    data_[static_cast<size_t>(j) * dim_ + i] = v;
  }

  Matrix dense() const {
    Matrix m(dim_, dim_);
    m.data = data_;
    return m;
  }

  std::vector<double> diag() const {
    std::vector<double> d(dim_);
    for (int i = 0; i < dim_; ++i) d[i] = (*this)(i, i);
    return d;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

private:
  int dim_ = 0;
  std::vector<double> data_;
};

/// Result of sym_eigen. Eigenvalues ascending; eigenvector j is the j-th
/// column of `eigenvectors` and the columns are orthonormal.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;

  double min_eigenvalue() const { return eigenvalues.front(); }
  double max_eigenvalue() const { return eigenvalues.back(); }
};

namespace detail {

inline double offdiag_sum_sq(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j) s += a(i, j) * a(i, j);
  return s;
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Dimensions in this library stay small (<= 64), where Jacobi is
/// unconditionally stable and needs no external solver.
inline EigenDecomposition sym_eigen(const SymMatrix& m) {
  const int n = m.dim();
  Matrix a = m.dense();
  if (!a.all_finite()) throw domain_error("sym_eigen: non-finite entry");
  Matrix v = Matrix::identity(n);

  const double scale = std::max(1.0, m.frobenius_norm());
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double off = std::sqrt(2.0 * detail::offdiag_sum_sq(a));
    if (off <= 1e-15 * scale) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * scale) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        for (int r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });

  EigenDecomposition dec;
  dec.eigenvalues.resize(n);
  dec.eigenvectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    dec.eigenvalues[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) dec.eigenvectors(i, j) = v(i, order[j]);
  }
  return dec;
}

/// Scale-relative rank tolerance used throughout: a symmetric matrix counts
/// as singular when min|eigenvalue| <= 1e-12 * max|eigenvalue|. Matches the
/// sigma^2 dynamic range of the experiments (1e-7 .. 1e-4).
inline constexpr double kRankTolerance = 1e-12;

inline bool is_singular(const EigenDecomposition& dec) {
  double max_abs = 0.0, min_abs = std::numeric_limits<double>::infinity();
  for (double l : dec.eigenvalues) {
    max_abs = std::max(max_abs, std::abs(l));
    min_abs = std::min(min_abs, std::abs(l));
  }
  return min_abs <= kRankTolerance * max_abs || max_abs == 0.0;
}

/// Inverse of a symmetric matrix via its eigendecomposition.
inline SymMatrix sym_inverse(const SymMatrix& m) {
  const EigenDecomposition dec = sym_eigen(m);
  double min_abs = std::numeric_limits<double>::infinity();
  for (double l : dec.eigenvalues) min_abs = std::min(min_abs, std::abs(l));
  if (is_singular(dec)) {
    std::ostringstream msg;
    msg << "sym_inverse: matrix singular within tolerance, min |eigenvalue| = " << min_abs;
    throw singular_matrix_error(msg.str(), min_abs);
  }
  const int n = m.dim();
  const Matrix& v = dec.eigenvectors;
  Matrix inv(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int l = 0; l < n; ++l) s += v(i, l) * v(j, l) / dec.eigenvalues[l];
      inv(i, j) = inv(j, i) = s;
    }
  return SymMatrix::from_dense(inv);
}

/// Inverse of the Schur complement of the trailing (dim-r) block:
/// with m = [[M_11, B], [B^T, M_22]], returns (M_11 - B M_22^{-1} B^T)^{-1},
/// an r x r matrix. Equals the top-left r x r block of sym_inverse(m).
inline SymMatrix schur_reduce(const SymMatrix& m, int r) {
  const int n = m.dim();
  if (r < 1 || r >= n) throw domain_error("schur_reduce: need 1 <= r < dim");
  const int s = n - r;

  SymMatrix m22(s);
  for (int i = 0; i < s; ++i)
    for (int j = i; j < s; ++j) m22.set(i, j, m(r + i, r + j));
  SymMatrix m22_inv = [&] {
    try {
      return sym_inverse(m22);
    } catch (const singular_matrix_error& e) {
      throw singular_matrix_error(
          std::string("schur_reduce: trailing block singular: ") + e.what(),
          e.min_abs_eigenvalue);
    }
  }();

  Matrix b(r, s);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) b(i, j) = m(i, r + j);

  const Matrix cross = (b * m22_inv.dense()) * b.transposed();
  Matrix complement(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) complement(i, j) = m(i, j) - cross(i, j);
  return sym_inverse(SymMatrix::from_dense(complement));
}

/// M' with M'_ij = d_i d_j M_ij, i.e. diag(d) * M * diag(d). Used to form the
/// power-scaled information matrix without materializing diagonal factors.
inline SymMatrix diag_congruence(const SymMatrix& m, const std::vector<double>& d) {
  if (static_cast<int>(d.size()) != m.dim())
    throw domain_error("diag_congruence: dimension mismatch");
  SymMatrix out(m.dim());
  for (int i = 0; i < m.dim(); ++i)
    for (int j = i; j < m.dim(); ++j) out.set(i, j, d[i] * d[j] * m(i, j));
  return out;
}

}  // namespace powalloc

#endif  // POWALLOC_MATRIX_HPP
