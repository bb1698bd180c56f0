#ifndef POWALLOC_ERRORS_HPP
#define POWALLOC_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace powalloc {

/// Base class for every error thrown by this library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid value or shape in an input (non-finite entry, nonpositive
/// variance, dimension mismatch, ...).
class domain_error : public error {
public:
  using error::error;
};

/// Matrix is singular within the rank tolerance. Carries the offending
/// minimum |eigenvalue|.
class singular_matrix_error : public error {
public:
  singular_matrix_error(const std::string& msg, double min_abs_eigenvalue)
      : error(msg), min_abs_eigenvalue(min_abs_eigenvalue) {}
  double min_abs_eigenvalue;
};

/// Channel matrix (or Jacobian) is rank deficient.
class rank_error : public error {
public:
  using error::error;
};

/// Quadrature failed to reach the requested tolerance. Carries the residual
/// actually achieved.
class integration_error : public error {
public:
  integration_error(const std::string& msg, double residual)
      : error(msg), residual(residual) {}
  double residual;
};

/// The optimization problem has no meaningful solution (e.g. every CRLB
/// diagonal is zero).
class degenerate_problem_error : public error {
public:
  using error::error;
};

/// An objective returned a non-finite value at a feasible point. Carries the
/// point that triggered it.
class evaluation_error : public error {
public:
  evaluation_error(const std::string& msg, std::vector<double> point)
      : error(msg), point(std::move(point)) {}
  std::vector<double> point;
};

/// Problem reading or validating an external file (model JSON, output path).
class io_error : public error {
public:
  using error::error;
};

}  // namespace powalloc

#endif  // POWALLOC_ERRORS_HPP
