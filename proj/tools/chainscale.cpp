#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "chainscale/scenario.hpp"

using namespace chainscale;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kParse = 2, kInfeasible = 3, kDivergence = 4, kExpectation = 5 };

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    if (part.empty()) continue;
    std::size_t used = 0;
    const int k = std::stoi(part, &used);
    if (used != part.size() || k <= 0 || k % 2) throw std::invalid_argument("k must be a positive even integer: " + part);
    ks.push_back(k);
  }
  if (ks.empty()) throw std::invalid_argument("empty k list");
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VNF chain scaling scenarios"};
  app.require_subcommand(1);

  RunOverrides overrides;
  std::optional<double> beta;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::string solver;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--beta", beta, "ADMM penalty parameter")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "ADMM permutation seed");
    sub->add_option("--iters", iters, "ADMM iteration count")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "directory for report and CSV output");
  };

  std::vector<std::string> files;
  auto* run = app.add_subcommand("run", "run one or more scenario files");
  run->add_option("files", files, "scenario files")->required()->check(CLI::ExistingFile);
  run->add_option("--solver", solver, "comma list of lp, milp, rpadmm, or all");
  add_common(run);

  std::string ks_text = "2,4,8";
  std::optional<double> budget;
  bool counts_only = false;
  auto* sweep = app.add_subcommand("sweep", "model sizes and solve times across fat-tree sizes");
  sweep->add_option("--k", ks_text, "comma list of fat-tree k");
  sweep->add_option("--budget", budget, std::string("seconds per model (default from ") + kTimeBudgetEnv + " or 1200)");
  sweep->add_flag("--counts-only", counts_only, "build the models without solving");
  sweep->add_option("--out-dir", out_dir, "directory for sweep.csv");

  std::string compare_file;
  auto* compare = app.add_subcommand("compare", "central LP against RP-ADMM on an overload scenario");
  compare->add_option("file", compare_file, "scenario file")->required()->check(CLI::ExistingFile);
  add_common(compare);

  CLI11_PARSE(app, argc, argv);

  overrides.beta = beta;
  overrides.seed = seed;
  overrides.iters = iters;

  try {
    if (!solver.empty()) overrides.solvers = parse_solver_mask(solver);

    if (*run) {
      std::vector<RunReport> reports;
      for (const auto& f : files) reports.push_back(run_scenario(load_scenario(f), overrides));
      normalize_costs(reports);
      bool all_passed = true;
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        std::cout << format_report(r) << "\n";
        if (!out_dir.empty()) {
          const auto dir = reports.size() == 1 ? std::filesystem::path(out_dir) : std::filesystem::path(out_dir) / r.scenario;
          for (const auto& p : write_outputs(r, dir)) std::cout << "wrote " << p.string() << "\n";
        }
        all_passed = all_passed && r.expectations_passed();
      }
      return all_passed ? kOk : kExpectation;
    }

    if (*sweep) {
      const auto rows = sweep_topologies(parse_ks(ks_text), budget.value_or(time_budget_from_env()), !counts_only);
      const std::string table = format_sweep(rows);
      std::cout << table;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "sweep.csv") << table;
      }
      return kOk;
    }

    if (*compare) {
      const GapReport g = compare_scenario(load_scenario(compare_file), overrides);
      std::cout << "LP optimum: " << g.lp_optimum << "\n";
      std::cout << "iteration,objective,gap,max_violation\n";
      for (std::size_t i = 0; i < g.gap.size(); ++i) {
        std::cout << i + 1 << ',' << g.objective[i] << ',' << g.gap[i] << ',' << g.trace.iterations[i].max_violation
                  << "\n";
      }
      std::cout << "final gap: " << g.final_gap << "\n";
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(std::filesystem::path(out_dir) / "trace.csv") << trace_csv(g.trace);
        std::ofstream(std::filesystem::path(out_dir) / "permutations.txt") << permutation_log(g.trace);
      }
      return kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ScenarioInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
