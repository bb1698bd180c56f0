#ifndef POWALLOC_CLI_HPP
#define POWALLOC_CLI_HPP

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "powalloc/allocators.hpp"
#include "powalloc/experiments.hpp"
#include "powalloc/model_json.hpp"
#include "powalloc/montecarlo.hpp"

namespace powalloc {

inline nlohmann::json report_to_json(const AllocationReport& r) {
  nlohmann::json j;
  j["criterion"] = criterion_name(r.criterion);
  j["powers"] = r.allocation.powers;
  j["budget"] = r.allocation.budget;
  j["objective_value"] = r.objective_value;
  j["certificate_residual"] = r.certificate_residual;
  j["equal_allocation_objective"] = r.equal_allocation_objective;
  j["is_bound"] = r.is_bound;
  j["converged"] = r.converged;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::json summary_to_json(const TrialSummary& s) {
  nlohmann::json j;
  j["trials"] = s.trials;
  j["empirical_avg_mse"] = s.empirical_avg_mse;
  j["per_coordinate_mse"] = s.per_coordinate_mse;
  j["per_coordinate_bias"] = s.per_coordinate_bias;
  j["crlb_trace"] = s.crlb_trace;
  j["crlb_diag"] = s.crlb_diag;
  j["ratio"] = s.ratio;
  j["excluded"] = s.excluded;
  j["has_exclusions"] = !s.excluded.empty();
  return j;
}

namespace detail {

inline void parse_k_range(const std::string& text, int& lo, int& hi) {
  const auto pos = text.find("..");
  try {
    if (pos == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, pos));
      hi = std::stoi(text.substr(pos + 2));
    }
  } catch (const std::exception&) {
    throw CLI::ValidationError("--k", "expected an integer or a range A..B");
  }
  if (lo < 1 || hi > 64 || lo > hi)
    throw CLI::ValidationError("--k", "range must lie within [1, 64] with A <= B");
}

inline std::vector<Criterion> parse_criteria(const std::string& text) {
  if (text == "all")
    return {std::begin(kAllCriteria), std::end(kAllCriteria)};
  try {
    return {parse_criterion(text)};
  } catch (const domain_error& e) {
    throw CLI::ValidationError("--criterion", e.what());
  }
}

inline void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw io_error("cannot open output file " + out_path);
  out << text << "\n";
}

}  // namespace detail

/// Entry point behind the `powalloc` binary; also callable from tests.
/// Subcommands: allocate, experiment, validate. Exit codes: 0 success,
/// 1 validation error, 2 usage error.
inline int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Transmit-power allocation for vector parameter estimation\n"
               "under Fisher-information optimality criteria"};
  app.require_subcommand(1);

  std::string model_path, criterion_text = "all", scenario_text, k_text = "2..30", out_path;
  double budget_db = 0.0;
  std::uint64_t seed = 0;
  long trials = 100000;
  int restarts = 64;

  auto* alloc_cmd = app.add_subcommand(
      "allocate", "Compute the optimal allocation for a model file and print the report");
  alloc_cmd->add_option("--model", model_path, "model JSON file")->required();
  alloc_cmd->add_option("--criterion,--criteria", criterion_text,
                        "criterion name or 'all'");
  alloc_cmd->add_option("--budget", budget_db, "total power in dB (0 dB = unit power)");
  alloc_cmd->add_option("--seed", seed, "multistart seed");
  alloc_cmd->add_option("--restarts", restarts, "multistart restarts");
  alloc_cmd->add_option("--out", out_path, "write JSON here instead of stdout");

  auto* exp_cmd = app.add_subcommand(
      "experiment", "Sweep k for a scenario and write per-criterion CSV data");
  exp_cmd->add_option("--scenario", scenario_text, "F1 | F2 | all | model JSON path")
      ->required();
  exp_cmd->add_option("--k", k_text, "k range A..B (within [1, 64])");
  exp_cmd->add_option("--criterion,--criteria", criterion_text, "criterion name or 'all'");
  exp_cmd->add_option("--budget", budget_db, "total power in dB");
  exp_cmd->add_option("--seed", seed, "multistart seed");
  exp_cmd->add_option("--restarts", restarts, "multistart restarts");
  exp_cmd->add_option("--out", out_path, "output directory for CSV files")->required();

  auto* val_cmd = app.add_subcommand(
      "validate", "Monte Carlo check of an allocation against the CRLB");
  val_cmd->add_option("--model", model_path, "model JSON file")->required();
  val_cmd->add_option("--criterion,--criteria", criterion_text,
                      "criterion producing the allocation under test")
      ->required();
  val_cmd->add_option("--budget", budget_db, "total power in dB");
  val_cmd->add_option("--trials", trials, "Monte Carlo trials");
  val_cmd->add_option("--seed", seed, "simulation and multistart seed");
  val_cmd->add_option("--restarts", restarts, "multistart restarts");
  val_cmd->add_option("--out", out_path, "write JSON here instead of stdout");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const double budget = db_to_linear(budget_db);
    MultistartOptions opts;
    opts.seed = seed;
    opts.restarts = restarts;

    if (alloc_cmd->parsed()) {
      const SystemModel model = load_model_file(model_path);
      FimBundle bundle = build_fim_bundle(model);
      // with nuisance parameters present, power is allocated over the
      // relevant block only (nuisance coordinates transmit at unit power)
      if (model.nuisance_count() > 0) bundle = bundle.reduced_view();
      const std::vector<Criterion> criteria = detail::parse_criteria(criterion_text);
      nlohmann::json out;
      if (criteria.size() == 1) {
        out = report_to_json(allocate(bundle, criteria[0], budget, opts));
      } else {
        out = nlohmann::json::array();
        for (Criterion c : criteria) out.push_back(report_to_json(allocate(bundle, c, budget, opts)));
      }
      detail::emit(out.dump(2), out_path);
      return 0;
    }

    if (exp_cmd->parsed()) {
      ScenarioConfig cfg;
      if (scenario_text == "F1") {
        cfg.scenarios = {Scenario::f1()};
      } else if (scenario_text == "F2") {
        cfg.scenarios = {Scenario::f2()};
      } else if (scenario_text == "all") {
        cfg.scenarios = {Scenario::f1(), Scenario::f2()};
      } else {
        const SystemModel model = load_model_file(scenario_text);
        const std::string stem = std::filesystem::path(scenario_text).stem().string();
        cfg.scenarios = {Scenario::custom(stem, model)};
      }
      detail::parse_k_range(k_text, cfg.k_min, cfg.k_max);
      cfg.criteria = detail::parse_criteria(criterion_text);
      cfg.budget_db = budget_db;
      cfg.seed = seed;
      cfg.restarts = restarts;
      cfg.output_dir = out_path;
      const std::vector<SweepRow> rows = run_sweep(cfg, &std::cerr);
      for (const std::string& path : write_sweep_csv(rows, out_path))
        std::cout << path << "\n";
      return 0;
    }

    // validate
    if (criterion_text == "all")
      throw CLI::ValidationError("--criterion", "validate needs a single criterion");
    const SystemModel model = load_model_file(model_path);
    FimBundle bundle = build_fim_bundle(model);
    if (model.nuisance_count() > 0) bundle = bundle.reduced_view();
    const Criterion criterion = detail::parse_criteria(criterion_text).at(0);
    const AllocationReport report = allocate(bundle, criterion, budget, opts);
    PowerAllocation full = report.allocation;
    for (int i = 0; i < model.nuisance_count(); ++i) {
      full.powers.push_back(1.0);  // nuisance coordinates transmit at unit power
      full.budget += 1.0;
    }
    TrialConfig cfg{trials, {}, seed, model, full};
    const TrialSummary summary = run_trials(cfg);
    nlohmann::json out;
    out["allocation"] = report_to_json(report);
    out["summary"] = summary_to_json(summary);
    detail::emit(out.dump(2), out_path);
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace powalloc

#endif  // POWALLOC_CLI_HPP
