#ifndef POWALLOC_EXPERIMENTS_HPP
#define POWALLOC_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "powalloc/allocators.hpp"
#include "powalloc/errors.hpp"
#include "powalloc/model.hpp"
#include "powalloc/rng.hpp"

namespace powalloc {

enum class ScenarioKind { F1, F2, custom };

/// One sweep scenario: a built-in channel family (F1 identity, F2 identity
/// plus normalized Vandermonde) or a fixed user model loaded from file.
struct Scenario {
  ScenarioKind kind = ScenarioKind::F1;
  std::string name = "F1";
  std::optional<SystemModel> model;  // set for ScenarioKind::custom

  static Scenario f1() { return {ScenarioKind::F1, "F1", std::nullopt}; }
  static Scenario f2() { return {ScenarioKind::F2, "F2", std::nullopt}; }
  static Scenario custom(std::string name, SystemModel model) {
    return {ScenarioKind::custom, std::move(name), std::move(model)};
  }
};

/// Noise grid of the experiments: sigma_i^2 = 10^(-7 + 3 (i-1)/(n-1)).
inline std::vector<double> experiment_variances(int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? 1e-7 : std::pow(10.0, -7.0 + 3.0 * i / (n - 1.0));
  return v;
}

/// Channel of the F2 scenario: I + kappa V^T with V the k x k Vandermonde
/// matrix over bases 1, 1+eps, ..., 1.5 (eps = 0.5/(k-1)) and kappa chosen so
/// both summands have equal Frobenius norm.
inline Matrix f2_channel(int k) {
  if (k < 2) throw domain_error("f2_channel: k >= 2 required (eps undefined at k = 1)");
  const double eps = 0.5 / (k - 1);
  Matrix v(k, k);
  for (int i = 0; i < k; ++i) {
    const double base = 1.0 + eps * i;
    double pow_ij = 1.0;
    for (int j = 0; j < k; ++j) {
      v(i, j) = pow_ij;
      pow_ij *= base;
    }
  }
  const double kappa = std::sqrt(static_cast<double>(k)) / v.frobenius_norm();
  Matrix f = Matrix::identity(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) f(i, j) += kappa * v(j, i);
  return f;
}

/// Builds the k-dimensional model of a built-in scenario (n = k, Gaussian
/// noise on the sigma grid). Pure function of (kind, k).
inline SystemModel build_scenario(ScenarioKind kind, int k) {
  if (k < 1) throw domain_error("build_scenario: k >= 1 required");
  NoiseModel noise = NoiseModel::gaussian_diagonal(experiment_variances(k));
  switch (kind) {
    case ScenarioKind::F1: return SystemModel::linear(Matrix::identity(k), std::move(noise));
    case ScenarioKind::F2: return SystemModel::linear(f2_channel(k), std::move(noise));
    case ScenarioKind::custom:
      throw domain_error("build_scenario: custom scenarios carry their own model");
  }
  throw domain_error("build_scenario: unknown scenario kind");
}

struct ScenarioConfig {
  std::vector<Scenario> scenarios;
  int k_min = 2;
  int k_max = 30;
  double budget_db = 0.0;  // 0 dB, i.e. unit total power
  std::vector<Criterion> criteria{std::begin(kAllCriteria), std::end(kAllCriteria)};
  std::string output_dir;
  std::uint64_t seed = 0;
  int restarts = 64;

  void validate() const {
    if (scenarios.empty()) throw domain_error("ScenarioConfig: at least one scenario");
    if (criteria.empty()) throw domain_error("ScenarioConfig: at least one criterion");
    if (k_min < 1 || k_max > 64 || k_min > k_max)
      throw domain_error("ScenarioConfig: k range must lie within [1, 64]");
    if (!std::isfinite(budget_db)) throw domain_error("ScenarioConfig: budget_db not finite");
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// One CSV row. The objective columns hold the comparison metric each figure
/// plots, for the optimal and the equal power split:
///   avg_mse         mean CRLB diagonal, tr{P^-1 A P^-1} / k   (lower better)
///   shannon         log det of the information matrix          (higher better)
///   worst_eigen     largest CRLB eigenvalue, 1 / lambda_min    (lower better)
///   worst_coord_var largest CRLB diagonal                      (lower better)
///   avg_fi          information trace                          (higher better)
///   worst_coord_fi  smallest information diagonal              (higher better)
struct SweepRow {
  int k = 0;
  std::string scenario;
  std::string criterion;
  double optimal_objective = 0.0;
  double equal_allocation_objective = 0.0;
  std::vector<double> powers;
};

/// True when `optimal` is at least as good as `equal` for the row's
/// criterion, within `slack` relative tolerance.
inline bool row_dominates(const SweepRow& row, double slack) {
  const Criterion c = parse_criterion(row.criterion);
  const double allowance = slack * std::max({1.0, std::abs(row.optimal_objective),
                                             std::abs(row.equal_allocation_objective)});
  const bool maximize = criterion_maximizes(c) ^ (c == Criterion::worst_eigen);
  // worst_eigen rows carry the *largest CRLB eigenvalue*, so smaller is better
  // there despite the allocator maximizing the information eigenvalue.
  if (maximize) return row.optimal_objective >= row.equal_allocation_objective - allowance;
  return row.optimal_objective <= row.equal_allocation_objective + allowance;
}

namespace detail {

inline SweepRow make_row(int k, const std::string& scenario_name, Criterion criterion,
                         const AllocationReport& report) {
  SweepRow row;
  row.k = k;
  row.scenario = scenario_name;
  row.criterion = criterion_name(criterion);
  row.powers = report.allocation.powers;
  switch (criterion) {
    case Criterion::avg_mse:
      row.optimal_objective = report.objective_value / k;
      row.equal_allocation_objective = report.equal_allocation_objective / k;
      break;
    case Criterion::worst_eigen:
      row.optimal_objective = 1.0 / report.objective_value;
      row.equal_allocation_objective = 1.0 / report.equal_allocation_objective;
      break;
    default:
      row.optimal_objective = report.objective_value;
      row.equal_allocation_objective = report.equal_allocation_objective;
      break;
  }
  return row;
}

inline std::string format_sig(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace detail

/// Runs every (scenario, criterion, k) cell and returns the rows sorted by
/// (scenario, criterion, k). A failing cell is logged and skipped; the sweep
/// continues. Deterministic for fixed config: the multistart seed of each
/// cell is derived from (config seed, scenario, criterion, k) alone.
inline std::vector<SweepRow> run_sweep(const ScenarioConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  const double budget = db_to_linear(cfg.budget_db);
  std::vector<SweepRow> rows;

  for (size_t si = 0; si < cfg.scenarios.size(); ++si) {
    const Scenario& scenario = cfg.scenarios[si];
    const bool custom = scenario.kind == ScenarioKind::custom;
    const int k_lo = custom ? scenario.model->k() : cfg.k_min;
    const int k_hi = custom ? scenario.model->k() : cfg.k_max;
    for (int k = k_lo; k <= k_hi; ++k) {
      std::optional<FimBundle> bundle;
      for (size_t ci = 0; ci < cfg.criteria.size(); ++ci) {
        const Criterion criterion = cfg.criteria[ci];
        try {
          if (!bundle) {
            bundle = build_fim_bundle(custom ? *scenario.model
                                             : build_scenario(scenario.kind, k));
            // custom models may carry a nuisance partition: allocate over the
            // relevant block, as the allocate subcommand does
            if (bundle->reduced) bundle = bundle->reduced_view();
          }
          MultistartOptions opts;
          opts.restarts = cfg.restarts;
          opts.seed = CounterRng(cfg.seed, (static_cast<std::uint64_t>(si) << 40) ^
                                               (static_cast<std::uint64_t>(ci) << 32) ^
                                               static_cast<std::uint64_t>(k))
                          .next_u64();
          rows.push_back(detail::make_row(k, scenario.name, criterion,
                                          allocate(*bundle, criterion, budget, opts)));
        } catch (const error& e) {
          if (log)
            *log << "skipped scenario=" << scenario.name
                 << " criterion=" << criterion_name(criterion) << " k=" << k << ": "
                 << e.what() << "\n";
        }
      }
    }
  }

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.scenario, a.criterion, a.k) < std::tie(b.scenario, b.criterion, b.k);
  });
  return rows;
}

inline std::string sweep_csv_header() {
  return "k,scenario,criterion,optimal_objective,equal_allocation_objective,powers";
}

inline std::string sweep_csv_line(const SweepRow& row) {
  std::string line = std::to_string(row.k) + "," + row.scenario + "," + row.criterion + "," +
                     detail::format_sig(row.optimal_objective) + "," +
                     detail::format_sig(row.equal_allocation_objective) + ",";
  for (size_t i = 0; i < row.powers.size(); ++i) {
    if (i) line += ";";
    line += detail::format_sig(row.powers[i]);
  }
  return line;
}

/// Writes one CSV per criterion present in `rows` into `output_dir`
/// (<criterion>.csv, fixed schema, 12 significant digits). Returns the file
/// paths written, sorted.
inline std::vector<std::string> write_sweep_csv(const std::vector<SweepRow>& rows,
                                                const std::string& output_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw io_error("write_sweep_csv: cannot create directory " + output_dir);

  std::vector<std::string> names;
  for (const SweepRow& row : rows)
    if (std::find(names.begin(), names.end(), row.criterion) == names.end())
      names.push_back(row.criterion);
  std::sort(names.begin(), names.end());

  std::vector<std::string> paths;
  for (const std::string& name : names) {
    const std::string path = (fs::path(output_dir) / (name + ".csv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("write_sweep_csv: cannot open " + path);
    out << sweep_csv_header() << "\n";
    for (const SweepRow& row : rows)
      if (row.criterion == name) out << sweep_csv_line(row) << "\n";
    paths.push_back(path);
  }
  return paths;
}

}  // namespace powalloc

#endif  // POWALLOC_EXPERIMENTS_HPP
