#ifndef POWALLOC_MONTECARLO_HPP
#define POWALLOC_MONTECARLO_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "powalloc/allocators.hpp"
#include "powalloc/errors.hpp"
#include "powalloc/matrix.hpp"
#include "powalloc/model.hpp"
#include "powalloc/rng.hpp"

namespace powalloc {

/// One Monte Carlo experiment: simulate the linear Gaussian model under a
/// fixed allocation, estimate with the efficient (ML / weighted least
/// squares) estimator, compare against the CRLB.
struct TrialConfig {
  long trials = 100000;
  std::vector<double> theta_true;  // empty -> all ones
  std::uint64_t seed = 0;
  SystemModel model;
  PowerAllocation allocation;
};

struct TrialSummary {
  long trials = 0;
  double empirical_avg_mse = 0.0;          // mean ||theta_hat - theta||^2 over estimable coords
  std::vector<double> per_coordinate_mse;  // zero on excluded coordinates
  std::vector<double> per_coordinate_bias;
  double crlb_trace = 0.0;                 // sum of a_jj / p_j over estimable coords
  std::vector<double> crlb_diag;           // a_jj / p_j, zero on excluded coordinates
  std::vector<double> ratio;               // empirical / bound, zero on excluded coordinates
  std::vector<int> excluded;               // unidentifiable (zero-power) coordinates
};

namespace detail {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

// Deterministic pairwise tree reduction; order independent of how batches
// would be scheduled because the tree depends only on batch indices.
inline std::vector<double> pairwise_reduce(std::vector<std::vector<double>> rows) {
  while (rows.size() > 1) {
    std::vector<std::vector<double>> next;
    for (size_t i = 0; i + 1 < rows.size(); i += 2) {
      std::vector<double> merged(rows[i].size());
      for (size_t j = 0; j < merged.size(); ++j) merged[j] = rows[i][j] + rows[i + 1][j];
      next.push_back(std::move(merged));
    }
    if (rows.size() % 2 == 1) next.push_back(std::move(rows.back()));
    rows = std::move(next);
  }
  return rows.empty() ? std::vector<double>{} : rows.front();
}

}  // namespace detail

/// Runs the trials. Coordinates with zero allocated power are unidentifiable
/// under this model; they are excluded from the estimator and listed in the
/// summary rather than silently folded in.
inline TrialSummary run_trials(const TrialConfig& cfg) {
  if (cfg.trials < 1) throw domain_error("run_trials: trials >= 1 required");
  if (!cfg.model.is_linear())
    throw domain_error("run_trials: linear models only (the WLS estimator is the ML "
                       "estimator only in the linear Gaussian model)");
  if (cfg.model.noise().kind() != NoiseModel::Kind::gaussian_diagonal)
    throw domain_error("run_trials: gaussian_diagonal noise required");
  const int k = cfg.model.k();
  const int n = cfg.model.n();
  cfg.allocation.validate();
  if (cfg.allocation.k() != k) throw domain_error("run_trials: allocation length != k");

  std::vector<double> theta = cfg.theta_true;
  if (theta.empty()) theta.assign(k, 1.0);
  if (static_cast<int>(theta.size()) != k)
    throw domain_error("run_trials: theta_true must have length k");

  const std::vector<double>& p = cfg.allocation.powers;
  double max_p = 0.0;
  for (double v : p) max_p = std::max(max_p, v);
  if (max_p <= 0.0) throw domain_error("run_trials: all powers are zero");

  TrialSummary summary;
  summary.trials = cfg.trials;
  std::vector<int> active;
  for (int i = 0; i < k; ++i) {
    if (p[i] > 1e-14 * max_p)
      active.push_back(i);
    else
      summary.excluded.push_back(i);
  }
  const int ka = static_cast<int>(active.size());

  // H = F^T P restricted to the estimable coordinates (n x ka).
  const Matrix& f = cfg.model.channel();
  Matrix h(n, ka);
  for (int j = 0; j < ka; ++j) {
    const int col = active[j];
    const double sp = std::sqrt(p[col]);
    for (int i = 0; i < n; ++i) h(i, j) = f(col, i) * sp;
  }

  const std::vector<double>& var = cfg.model.noise().variances();
  Matrix ht_sinv(ka, n);  // H^T Sigma^{-1}
  for (int j = 0; j < ka; ++j)
    for (int i = 0; i < n; ++i) ht_sinv(j, i) = h(i, j) / var[i];
  const SymMatrix gram = SymMatrix::from_dense(ht_sinv * h);
  SymMatrix gram_inv = [&] {
    try {
      return sym_inverse(gram);
    } catch (const singular_matrix_error& e) {
      throw singular_matrix_error(
          std::string("run_trials: estimator normal matrix singular (channel rank "
                      "deficient on the powered coordinates): ") +
              e.what(),
          e.min_abs_eigenvalue);
    }
  }();
  const Matrix estimator = gram_inv.dense() * ht_sinv;  // ka x n

  std::vector<double> mean_obs(n);  // H theta_active
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < ka; ++j) s += h(i, j) * theta[active[j]];
    mean_obs[i] = s;
  }
  std::vector<double> sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = std::sqrt(var[i]);

  // Batched accumulation: per-batch compensated sums of (error, error^2) per
  // coordinate, combined by a deterministic pairwise tree.
  const long batch_size = 4096;
  const long batches = (cfg.trials + batch_size - 1) / batch_size;
  CounterRng root(cfg.seed);
  std::vector<std::vector<double>> batch_sums;
  batch_sums.reserve(batches);

  std::vector<double> noise(n), err(ka);
  for (long b = 0; b < batches; ++b) {
    CounterRng rng = root.derive(static_cast<std::uint64_t>(b));
    const long lo = b * batch_size;
    const long hi = std::min(cfg.trials, lo + batch_size);
    std::vector<detail::KahanSum> acc(2 * ka);
    for (long t = lo; t < hi; ++t) {
      for (int i = 0; i < n; ++i) noise[i] = sigma[i] * rng.next_gaussian();
      for (int j = 0; j < ka; ++j) {
        double est = 0.0;
        for (int i = 0; i < n; ++i) est += estimator(j, i) * (mean_obs[i] + noise[i]);
        err[j] = est - theta[active[j]];
      }
      for (int j = 0; j < ka; ++j) {
        acc[j].add(err[j]);
        acc[ka + j].add(err[j] * err[j]);
      }
    }
    std::vector<double> row(2 * ka);
    for (int j = 0; j < 2 * ka; ++j) row[j] = acc[j].sum;
    batch_sums.push_back(std::move(row));
  }
  const std::vector<double> totals = detail::pairwise_reduce(std::move(batch_sums));

  // CRLB of the estimable subproblem: diag of (H^T Sigma^{-1} H)^{-1}. With
  // no exclusions this is exactly a_jj / p_j of the full model.
  summary.per_coordinate_mse.assign(k, 0.0);
  summary.per_coordinate_bias.assign(k, 0.0);
  summary.crlb_diag.assign(k, 0.0);
  summary.ratio.assign(k, 0.0);
  const double inv_trials = 1.0 / static_cast<double>(cfg.trials);
  for (int j = 0; j < ka; ++j) {
    const int coord = active[j];
    const double mse = totals[ka + j] * inv_trials;
    const double bias = totals[j] * inv_trials;
    const double bound = gram_inv(j, j);
    summary.per_coordinate_mse[coord] = mse;
    summary.per_coordinate_bias[coord] = bias;
    summary.crlb_diag[coord] = bound;
    summary.ratio[coord] = bound > 0.0 ? mse / bound : 0.0;
    summary.empirical_avg_mse += mse;
    summary.crlb_trace += bound;
  }
  return summary;
}

}  // namespace powalloc

#endif  // POWALLOC_MONTECARLO_HPP
