#ifndef POWALLOC_ALLOCATORS_HPP
#define POWALLOC_ALLOCATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "powalloc/errors.hpp"
#include "powalloc/matrix.hpp"
#include "powalloc/model.hpp"
#include "powalloc/optimizer.hpp"

namespace powalloc {

/// The six power-allocation criteria.
enum class Criterion {
  avg_mse,         // minimize trace of the CRLB
  shannon,         // maximize log det of the information matrix
  worst_eigen,     // maximize the minimum information eigenvalue
  worst_coord_var, // minimize the largest CRLB diagonal
  avg_fi,          // maximize the information trace
  worst_coord_fi,  // maximize the smallest information diagonal
};

inline constexpr Criterion kAllCriteria[] = {
    Criterion::avg_mse,        Criterion::shannon, Criterion::worst_eigen,
    Criterion::worst_coord_var, Criterion::avg_fi,  Criterion::worst_coord_fi,
};

inline const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::avg_mse: return "avg_mse";
    case Criterion::shannon: return "shannon";
    case Criterion::worst_eigen: return "worst_eigen";
    case Criterion::worst_coord_var: return "worst_coord_var";
    case Criterion::avg_fi: return "avg_fi";
    case Criterion::worst_coord_fi: return "worst_coord_fi";
  }
  return "?";
}

inline Criterion parse_criterion(const std::string& name) {
  for (Criterion c : kAllCriteria)
    if (name == criterion_name(c)) return c;
  std::ostringstream msg;
  msg << "unknown criterion '" << name << "'; valid names:";
  for (Criterion c : kAllCriteria) msg << " " << criterion_name(c);
  throw domain_error(msg.str());
}

/// True when larger objective values are better for the criterion.
inline bool criterion_maximizes(Criterion c) {
  switch (c) {
    case Criterion::avg_mse:
    case Criterion::worst_coord_var:
      return false;
    default:
      return true;
  }
}

/// Nonnegative power vector under a sum budget. Optimal allocations always
/// spend the full budget.
struct PowerAllocation {
  std::vector<double> powers;
  double budget = 0.0;

  int k() const { return static_cast<int>(powers.size()); }

  double sum() const {
    double s = 0.0;
    for (double p : powers) s += p;
    return s;
  }

  void validate() const {
    if (powers.empty() || !(budget > 0.0))
      throw domain_error("PowerAllocation: nonempty powers and positive budget required");
    for (double p : powers)
      if (!(p >= 0.0) || !std::isfinite(p))
        throw domain_error("PowerAllocation: powers must be finite and nonnegative");
    if (sum() > budget * (1.0 + 1e-12))
      throw domain_error("PowerAllocation: powers exceed the budget");
  }

  static PowerAllocation equal(int k, double budget) {
    return {std::vector<double>(k, budget / k), budget};
  }
};

/// Allocation plus its optimality certificate. `certificate_residual` is the
/// criterion-specific KKT/equalizer residual described on each allocator;
/// `equal_allocation_objective` is the same objective evaluated at the equal
/// power split, kept so comparison curves need no recomputation.
struct AllocationReport {
  Criterion criterion = Criterion::avg_mse;
  PowerAllocation allocation;
  double objective_value = 0.0;
  double certificate_residual = 0.0;
  double equal_allocation_objective = 0.0;
  bool is_bound = false;   // value bounds the exact optimum instead of attaining it
  bool converged = true;   // multistart convergence flag (worst_eigen only)
  std::string note;
};

namespace detail {

// Indices with a_ii exactly zero (below 1e-14 * max) are excluded from power;
// near-zero positive entries are kept to avoid discontinuous behavior.
inline bool effectively_zero(double v, double max_abs) {
  return v <= 1e-14 * max_abs;
}

inline double log_det_from_eigen(const SymMatrix& m, bool* singular) {
  const EigenDecomposition dec = sym_eigen(m);
  if (is_singular(dec) || dec.min_eigenvalue() <= 0.0) {
    *singular = true;
    return -std::numeric_limits<double>::infinity();
  }
  *singular = false;
  double s = 0.0;
  for (double l : dec.eigenvalues) s += std::log(l);
  return s;
}

inline double relative_spread(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
  const double mid = 0.5 * (*mn + *mx);
  if (mid == 0.0) return 0.0;
  return (*mx - *mn) / std::abs(mid);
}

}  // namespace detail

/// Minimum-CRLB-trace allocation: p_i proportional to sqrt(a_ii), zero on
/// coordinates whose CRLB diagonal is zero. Certificate: relative deviation
/// of sqrt(a_ii)/p_i from its mean over the powered coordinates (the KKT
/// stationarity ratio, constant at the optimum).
inline AllocationReport allocate_avg_mse(const FimBundle& bundle, double budget) {
  const std::vector<double>& a = bundle.a_diag;
  const int k = static_cast<int>(a.size());
  if (!(budget > 0.0)) throw domain_error("allocate_avg_mse: budget > 0 required");
  double max_a = 0.0;
  for (double v : a) max_a = std::max(max_a, v);
  if (max_a <= 0.0)
    throw degenerate_problem_error("allocate_avg_mse: every CRLB diagonal is zero");

  double sqrt_sum = 0.0;
  for (double v : a)
    if (!detail::effectively_zero(v, max_a)) sqrt_sum += std::sqrt(v);

  AllocationReport report;
  report.criterion = Criterion::avg_mse;
  report.allocation.budget = budget;
  report.allocation.powers.assign(k, 0.0);
  double objective = 0.0;
  std::vector<double> ratios;
  for (int i = 0; i < k; ++i) {
    if (detail::effectively_zero(a[i], max_a)) continue;
    const double p = budget * std::sqrt(a[i]) / sqrt_sum;
    report.allocation.powers[i] = p;
    objective += a[i] / p;
    ratios.push_back(std::sqrt(a[i]) / p);
  }
  report.objective_value = objective;

  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  double dev = 0.0;
  for (double r : ratios) dev = std::max(dev, std::abs(r - mean));
  report.certificate_residual = dev / mean;

  double eq = 0.0;
  for (double v : a) eq += v * k / budget;
  report.equal_allocation_objective = eq;
  return report;
}

/// Maximum log-determinant allocation: the equal power split, independent of
/// the system matrices. Objective log det(P J P) = sum_i log p_i + log det J.
/// Singular J is reported as a -infinity objective with a note, not an error.
inline AllocationReport allocate_shannon(const FimBundle& bundle, double budget) {
  const int k = bundle.dim();
  if (!(budget > 0.0)) throw domain_error("allocate_shannon: budget > 0 required");

  AllocationReport report;
  report.criterion = Criterion::shannon;
  report.allocation = PowerAllocation::equal(k, budget);

  bool singular = false;
  const double log_det_j = detail::log_det_from_eigen(bundle.J, &singular);
  if (singular) {
    report.objective_value = -std::numeric_limits<double>::infinity();
    report.equal_allocation_objective = report.objective_value;
    report.note = "J singular within tolerance: log det reported as -inf";
    return report;
  }
  const double closed = k * std::log(budget / k) + log_det_j;
  report.objective_value = closed;
  report.equal_allocation_objective = closed;

  // cross-check against a direct determinant of the assembled information matrix
  std::vector<double> sqrt_p(k, std::sqrt(budget / k));
  bool direct_singular = false;
  const double direct =
      detail::log_det_from_eigen(diag_congruence(bundle.J, sqrt_p), &direct_singular);
  report.certificate_residual =
      direct_singular ? 0.0 : std::abs(closed - direct) / (1.0 + std::abs(direct));
  return report;
}

/// Information matrix scaled by the power split: entry (i,j) is
/// sqrt(p_i p_j) J_ij.
inline SymMatrix information_matrix(const SymMatrix& j, const std::vector<double>& powers) {
  std::vector<double> sqrt_p(powers.size());
  for (size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] >= 0.0)) throw domain_error("information_matrix: negative power");
    sqrt_p[i] = std::sqrt(powers[i]);
  }
  return diag_congruence(j, sqrt_p);
}

/// Max-min-eigenvalue allocation, solved numerically by multistart search
/// (no closed form exists). The certificate records how far the result sits
/// above the equal-allocation baseline, which is a guaranteed warm start.
/// Optimizer trouble degrades to the best point found with converged=false.
inline AllocationReport allocate_worst_eigen(const FimBundle& bundle, double budget,
                                             const MultistartOptions& opts = {}) {
  const int k = bundle.dim();
  if (!(budget > 0.0)) throw domain_error("allocate_worst_eigen: budget > 0 required");
  const EigenDecomposition jdec = sym_eigen(bundle.J);
  if (jdec.min_eigenvalue() <= 0.0)
    throw domain_error("allocate_worst_eigen: J must be positive definite");

  const auto objective = [&bundle](const std::vector<double>& p) {
    return sym_eigen(information_matrix(bundle.J, p)).min_eigenvalue();
  };

  AllocationReport report;
  report.criterion = Criterion::worst_eigen;
  const double baseline = (budget / k) * jdec.min_eigenvalue();
  report.equal_allocation_objective = baseline;

  const MultistartResult res = multistart_maximize(objective, k, budget, opts);
  report.converged = res.converged_starts > 0;
  report.allocation = {res.p, budget};
  report.objective_value = res.value;
  report.certificate_residual = std::max(0.0, baseline - res.value);
  if (!report.converged) report.note = "multistart did not converge; best point returned";
  return report;
}

/// Equal power split maximizing the eigenvalue lower bound
/// lambda_min(J) * min_i p_i. The objective value bounds the exact optimum
/// from below and is flagged as such.
inline AllocationReport allocate_worst_eigen_bound(const FimBundle& bundle, double budget) {
  const int k = bundle.dim();
  if (!(budget > 0.0)) throw domain_error("allocate_worst_eigen_bound: budget > 0 required");
  const EigenDecomposition jdec = sym_eigen(bundle.J);
  if (jdec.min_eigenvalue() < -1e-10 * std::abs(jdec.max_eigenvalue()))
    throw domain_error("allocate_worst_eigen_bound: J must be positive semidefinite");

  AllocationReport report;
  report.criterion = Criterion::worst_eigen;
  report.allocation = PowerAllocation::equal(k, budget);
  report.objective_value = jdec.min_eigenvalue() * budget / k;
  report.equal_allocation_objective = report.objective_value;
  report.is_bound = true;
  report.note = "lower bound via equal allocation; not necessarily the exact optimum";
  return report;
}

/// Minimum worst-coordinate-variance allocation: p_i proportional to a_ii,
/// which equalizes every CRLB diagonal at alpha = tr(A)/budget. Certificate:
/// relative spread of a_ii/p_i over the powered coordinates.
inline AllocationReport allocate_worst_coord_var(const FimBundle& bundle, double budget) {
  const std::vector<double>& a = bundle.a_diag;
  const int k = static_cast<int>(a.size());
  if (!(budget > 0.0)) throw domain_error("allocate_worst_coord_var: budget > 0 required");
  double trace_a = 0.0, max_a = 0.0;
  for (double v : a) {
    trace_a += v;
    max_a = std::max(max_a, v);
  }
  if (max_a <= 0.0)
    throw degenerate_problem_error("allocate_worst_coord_var: every CRLB diagonal is zero");

  AllocationReport report;
  report.criterion = Criterion::worst_coord_var;
  report.allocation.budget = budget;
  report.allocation.powers.resize(k);
  std::vector<double> equalized;
  for (int i = 0; i < k; ++i) {
    report.allocation.powers[i] = budget * a[i] / trace_a;
    if (!detail::effectively_zero(a[i], max_a))
      equalized.push_back(a[i] / report.allocation.powers[i]);
  }
  report.objective_value = trace_a / budget;
  report.certificate_residual = detail::relative_spread(equalized);
  report.equal_allocation_objective = max_a * k / budget;
  return report;
}

/// Maximum-information-trace allocation: the whole budget on the coordinate
/// with the largest information diagonal (lowest index on ties).
inline AllocationReport allocate_avg_fi(const FimBundle& bundle, double budget) {
  const std::vector<double>& j = bundle.j_diag;
  const int k = static_cast<int>(j.size());
  if (k == 0) throw domain_error("allocate_avg_fi: empty information diagonal");
  if (!(budget > 0.0)) throw domain_error("allocate_avg_fi: budget > 0 required");

  int best = 0;
  for (int i = 1; i < k; ++i)
    if (j[i] > j[best]) best = i;

  AllocationReport report;
  report.criterion = Criterion::avg_fi;
  report.allocation.budget = budget;
  report.allocation.powers.assign(k, 0.0);
  report.allocation.powers[best] = budget;
  report.objective_value = budget * j[best];
  report.certificate_residual = 0.0;
  double trace_j = 0.0;
  for (double v : j) trace_j += v;
  report.equal_allocation_objective = trace_j * budget / k;
  return report;
}

/// Max-min-information-diagonal allocation: p_i inversely proportional to
/// j_ii, which equalizes p_i j_ii at budget / sum(1/j_ll). Certificate:
/// relative spread of p_i j_ii. Coordinates with j_ii <= 0 make the problem
/// infeasible (their information cannot be raised above zero).
inline AllocationReport allocate_worst_coord_fi(const FimBundle& bundle, double budget) {
  const std::vector<double>& j = bundle.j_diag;
  const int k = static_cast<int>(j.size());
  if (!(budget > 0.0)) throw domain_error("allocate_worst_coord_fi: budget > 0 required");
  double inv_sum = 0.0;
  double min_j = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    if (!(j[i] > 0.0)) {
      std::ostringstream msg;
      msg << "allocate_worst_coord_fi: information diagonal " << i << " is " << j[i]
          << " (must be positive)";
      throw degenerate_problem_error(msg.str());
    }
    inv_sum += 1.0 / j[i];
    min_j = std::min(min_j, j[i]);
  }

  AllocationReport report;
  report.criterion = Criterion::worst_coord_fi;
  report.allocation.budget = budget;
  report.allocation.powers.resize(k);
  std::vector<double> equalized(k);
  for (int i = 0; i < k; ++i) {
    report.allocation.powers[i] = budget / (j[i] * inv_sum);
    equalized[i] = report.allocation.powers[i] * j[i];
  }
  report.objective_value = budget / inv_sum;
  report.certificate_residual = detail::relative_spread(equalized);
  report.equal_allocation_objective = min_j * budget / k;
  return report;
}

/// Criterion dispatch.
inline AllocationReport allocate(const FimBundle& bundle, Criterion criterion, double budget,
                                 const MultistartOptions& opts = {}) {
  switch (criterion) {
    case Criterion::avg_mse: return allocate_avg_mse(bundle, budget);
    case Criterion::shannon: return allocate_shannon(bundle, budget);
    case Criterion::worst_eigen: return allocate_worst_eigen(bundle, budget, opts);
    case Criterion::worst_coord_var: return allocate_worst_coord_var(bundle, budget);
    case Criterion::avg_fi: return allocate_avg_fi(bundle, budget);
    case Criterion::worst_coord_fi: return allocate_worst_coord_fi(bundle, budget);
  }
  throw domain_error("allocate: unknown criterion");
}

struct NonlinearAllocationResult {
  AllocationReport report;
  int iterations = 0;
  bool converged = false;
};

/// Optional fixed-point refinement for nonlinear models, where the Jacobian
/// (and so the optimal allocation) depends on the operating point phi = P theta:
/// allocate, re-linearize at the new P theta, repeat. Single-shot allocation
/// at the model's own linearization point is the default elsewhere; this
/// helper is for callers that want the self-consistent point.
inline NonlinearAllocationResult allocate_nonlinear_fixed_point(
    const SystemModel& model, const std::vector<double>& theta, Criterion criterion,
    double budget, const MultistartOptions& opts = {}, int max_iterations = 20,
    double power_tolerance = 1e-6) {
  if (model.is_linear())
    throw domain_error("allocate_nonlinear_fixed_point: model must be nonlinear");
  if (static_cast<int>(theta.size()) != model.k())
    throw domain_error("allocate_nonlinear_fixed_point: theta must have length k");

  SystemModel current = model;
  NonlinearAllocationResult out;
  std::vector<double> prev;
  for (int it = 0; it < max_iterations; ++it) {
    out.report = allocate(build_fim_bundle(current), criterion, budget, opts);
    out.iterations = it + 1;
    const std::vector<double>& p = out.report.allocation.powers;
    if (!prev.empty()) {
      double delta = 0.0;
      for (int i = 0; i < model.k(); ++i) delta = std::max(delta, std::abs(p[i] - prev[i]));
      if (delta < power_tolerance * budget) {
        out.converged = true;
        return out;
      }
    }
    prev = p;
    std::vector<double> phi(model.k());
    for (int i = 0; i < model.k(); ++i) phi[i] = std::sqrt(p[i]) * theta[i];
    current = current.with_linearization_point(std::move(phi));
  }
  return out;
}

}  // namespace powalloc

#endif  // POWALLOC_ALLOCATORS_HPP
