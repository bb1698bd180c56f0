#ifndef POWALLOC_OPTIMIZER_HPP
#define POWALLOC_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "powalloc/errors.hpp"
#include "powalloc/rng.hpp"

namespace powalloc {

/// Options for the simplex-constrained multistart maximizer. Deterministic
/// for a fixed seed. The first starts are always the equal-allocation point
/// and the k budget corners; remaining starts are uniform simplex samples.
struct MultistartOptions {
  int restarts = 64;
  int max_iters_per_start = 500;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;        // relative objective change at convergence
  double reflect_coeff = 1.0;
  double expand_coeff = 2.0;
  double contract_coeff = 0.5;
  double shrink_coeff = 0.5;

  void validate() const {
    if (restarts < 1) throw domain_error("MultistartOptions: restarts >= 1 required");
    if (!(tolerance > 0.0)) throw domain_error("MultistartOptions: tolerance > 0 required");
    if (max_iters_per_start < 1)
      throw domain_error("MultistartOptions: max_iters_per_start >= 1 required");
  }
};

struct MultistartResult {
  std::vector<double> p;
  double value = 0.0;
  int converged_starts = 0;
};

/// Uniform point on {p >= 0, sum p = budget} by exponential spacings.
inline std::vector<double> sample_simplex(int k, double budget, CounterRng& rng) {
  if (k < 1) throw domain_error("sample_simplex: k >= 1 required");
  if (!(budget > 0.0)) throw domain_error("sample_simplex: budget > 0 required");
  std::vector<double> p(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    p[i] = -std::log(rng.next_unit());
    total += p[i];
  }
  for (int i = 0; i < k; ++i) p[i] *= budget / total;
  return p;
}

namespace detail {

/// Clamp negatives to zero, then rescale to the budget. Exact on the
/// nonnegative orthant; falls back to equal allocation from the zero vector.
inline void project_simplex(std::vector<double>& p, double budget) {
  double total = 0.0;
  for (double& x : p) {
    if (x < 0.0) x = 0.0;
    total += x;
  }
  if (total <= 0.0) {
    const double eq = budget / static_cast<double>(p.size());
    for (double& x : p) x = eq;
    return;
  }
  const double scale = budget / total;
  for (double& x : p) x *= scale;
}

struct SimplexSearch {
  const std::function<double(const std::vector<double>&)>& objective;
  double budget;
  const MultistartOptions& opts;

  double eval(std::vector<double>& p) const {
    project_simplex(p, budget);
    const double v = objective(p);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "multistart_maximize: objective non-finite at feasible point [";
      for (size_t i = 0; i < p.size(); ++i) msg << (i ? ", " : "") << p[i];
      msg << "]";
      throw evaluation_error(msg.str(), p);
    }
    return v;
  }

  /// Nelder-Mead reflection search run as a maximizer; every trial point is
  /// projected back onto the simplex before evaluation. Returns true when the
  /// vertex spread met the tolerance within the iteration cap.
  bool run(std::vector<double> start, std::vector<double>& best_p, double& best_v) const {
    const int k = static_cast<int>(start.size());
    const int m = k + 1;
    std::vector<std::vector<double>> verts(m, start);
    std::vector<double> vals(m);
    const double step = 0.5 * budget / k;
    for (int i = 1; i < m; ++i) verts[i][i - 1] += step;
    for (int i = 0; i < m; ++i) vals[i] = eval(verts[i]);

    bool converged = false;
    for (int iter = 0; iter < opts.max_iters_per_start; ++iter) {
      // order: vals[order[0]] worst, vals[order[m-1]] best (maximizing)
      std::vector<int> order(m);
      for (int i = 0; i < m; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
      const int worst = order[0], second_worst = order[1], best = order[m - 1];

      const double spread = std::abs(vals[best] - vals[worst]);
      if (spread <= opts.tolerance * (std::abs(vals[best]) + 1e-30)) {
        converged = true;
        break;
      }

      std::vector<double> centroid(k, 0.0);
      for (int i = 0; i < m; ++i) {
        if (i == worst) continue;
        for (int j = 0; j < k; ++j) centroid[j] += verts[i][j];
      }
      for (int j = 0; j < k; ++j) centroid[j] /= k;

      auto blend = [&](double coeff) {
        std::vector<double> p(k);
        for (int j = 0; j < k; ++j)
          p[j] = centroid[j] + coeff * (centroid[j] - verts[worst][j]);
        return p;
      };

      std::vector<double> reflected = blend(opts.reflect_coeff);
      const double fr = eval(reflected);
      if (fr > vals[best]) {
        std::vector<double> expanded = blend(opts.expand_coeff);
        const double fe = eval(expanded);
        if (fe > fr) {
          verts[worst] = std::move(expanded);
          vals[worst] = fe;
        } else {
          verts[worst] = std::move(reflected);
          vals[worst] = fr;
        }
        continue;
      }
      if (fr > vals[second_worst]) {
        verts[worst] = std::move(reflected);
        vals[worst] = fr;
        continue;
      }
      std::vector<double> contracted = blend(-opts.contract_coeff);
      const double fc = eval(contracted);
      if (fc > vals[worst]) {
        verts[worst] = std::move(contracted);
        vals[worst] = fc;
        continue;
      }
      // shrink toward the best vertex
      for (int i = 0; i < m; ++i) {
        if (i == best) continue;
        for (int j = 0; j < k; ++j)
          verts[i][j] = verts[best][j] + opts.shrink_coeff * (verts[i][j] - verts[best][j]);
        vals[i] = eval(verts[i]);
      }
    }

    for (int i = 0; i < m; ++i) {
      if (vals[i] > best_v) {
        best_v = vals[i];
        best_p = verts[i];
      }
    }
    return converged;
  }
};

}  // namespace detail

/// Maximizes a scalar objective over {p >= 0, sum p = budget}. Multistart
/// local search: deterministic warm starts (equal allocation, then the k
/// corners) followed by uniform simplex samples. Keeps the best point seen
/// over every evaluation, so the result can never fall below the best start.
inline MultistartResult multistart_maximize(
    const std::function<double(const std::vector<double>&)>& objective, int k, double budget,
    const MultistartOptions& opts = {}) {
  opts.validate();
  if (k < 1) throw domain_error("multistart_maximize: k >= 1 required");
  if (!(budget > 0.0)) throw domain_error("multistart_maximize: budget > 0 required");

  detail::SimplexSearch search{objective, budget, opts};

  if (k == 1) {
    std::vector<double> p{budget};
    const double v = search.eval(p);
    return {p, v, 1};
  }

  MultistartResult result;
  result.value = -std::numeric_limits<double>::infinity();

  CounterRng root(opts.seed);
  for (int r = 0; r < opts.restarts; ++r) {
    std::vector<double> start;
    if (r == 0) {
      start.assign(k, budget / k);
    } else if (r <= k) {
      start.assign(k, 0.0);
      start[r - 1] = budget;
    } else {
      CounterRng rng = root.derive(static_cast<std::uint64_t>(r));
      start = sample_simplex(k, budget, rng);
    }
    double best_v = -std::numeric_limits<double>::infinity();
    std::vector<double> best_p;
    const bool conv = search.run(std::move(start), best_p, best_v);
    if (conv) ++result.converged_starts;
    if (best_v > result.value) {
      result.value = best_v;
      result.p = std::move(best_p);
    }
  }
  return result;
}

}  // namespace powalloc

#endif  // POWALLOC_OPTIMIZER_HPP
