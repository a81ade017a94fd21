#include "flowsample/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "flowsample/analysis.hpp"
#include "flowsample/reproduce.hpp"
#include "flowsample/scenario.hpp"
#include "flowsample/solver.hpp"

namespace flowsample {

namespace {

struct CommonFlags {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool scenario_required) {
  auto* opt = cmd->add_option("--scenario", flags.scenario, "scenario file (key = value lines)");
  if (scenario_required) opt->required();
  cmd->add_option("--out", flags.out, "output CSV path (default: stdout)");
  cmd->add_option("--seed", flags.seed, "override the scenario seed");
  cmd->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
}

ScenarioFile load_scenario(const CommonFlags& flags) {
  ScenarioFile file = flags.scenario.empty() ? ScenarioFile{} : ScenarioFile::load(flags.scenario);
  if (flags.seed) file.set("seed", static_cast<double>(*flags.seed));
  if (flags.threads) file.set("threads", static_cast<double>(*flags.threads));
  return file;
}

void emit(const CommonFlags& flags, const std::string& text) {
  if (flags.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(flags.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + flags.out);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + flags.out);
}

void run_solve(const CommonFlags& flags, const std::string& table_path) {
  const ScenarioFile file = load_scenario(flags);
  const PathConfig path = scenario_path(file);
  const RviSolution solution = relative_value_iteration(path, scenario_solver_options(file));

  std::ostringstream out;
  out << "# schema=1\n";
  out << "metric,value\n";
  out << "gain," << format_number(solution.gain) << '\n';
  out << "iterations," << solution.iterations << '\n';
  out << "final_span," << format_number(solution.final_span) << '\n';
  out << "states," << solution.h.size() << '\n';
  emit(flags, out.str());

  if (table_path.empty()) return;
  std::ofstream table(table_path, std::ios::binary);
  if (!table) throw std::runtime_error("cannot open table file " + table_path);
  const StateSpace space(path.size(), path.counter_cap());
  table << "# schema=1\n";
  for (Index i = 0; i < path.size(); ++i) table << 'n' << (i + 1) << ',';
  table << "action\n";
  for (Index s = 0; s < space.size(); ++s) {
    const CounterState state = space.decode(s);
    for (Index i = 0; i < path.size(); ++i) table << state(i) << ',';
    table << solution.policy(s) + 1 << '\n';
  }
}

void run_simulate(const CommonFlags& flags) {
  const ScenarioFile file = load_scenario(flags);
  const ScenarioSpec spec = scenario_simulation(file);
  const SimulationReport report = simulate(spec);

  std::ostringstream out;
  out << "# schema=1\n";
  out << "# policy=" << policy_name(spec.policy) << " M=" << spec.path.size() << " T=" << spec.horizon
      << " reps=" << spec.replications << " burn_in=" << report.burn_in << " seed=" << report.seed << '\n';
  out << "metric,device,value\n";
  out << "mean_cost,," << format_number(report.mean_cost) << '\n';
  out << "cost_stderr,," << format_number(report.cost_stderr) << '\n';
  out << "slots_simulated,," << report.slots_simulated << '\n';
  for (Index i = 0; i < spec.path.size(); ++i) {
    out << "sampling_rate," << (i + 1) << ',' << format_number(report.per_device_sampling_rate(i)) << '\n';
  }
  for (Index i = 0; i < spec.path.size(); ++i) {
    out << "reset_rate," << (i + 1) << ',' << format_number(report.per_device_reset_rate(i)) << '\n';
  }
  emit(flags, out.str());
}

void run_analyze(const CommonFlags& flags) {
  const ScenarioFile file = load_scenario(flags);
  std::vector<int> Gs = {2, 3};
  if (file.has("G")) {
    Gs.clear();
    for (const double g : file.numbers("G")) {
      if (g < 1 || g != static_cast<int>(g)) throw ScenarioError("G", "key 'G': values must be positive integers");
      Gs.push_back(static_cast<int>(g));
    }
  }

  std::ostringstream out;
  out << "# schema=1\n";
  out << "M,cost_uniform";
  for (const int G : Gs) out << ",cost_order_G" << G;
  out << ",weights,cost_weighted,lower_bound\n";
  for (const PathConfig& path : scenario_paths(file)) {
    const WaterFillingResult wf = water_filling(path);
    out << path.size() << ',' << format_number(cost_uniform(path));
    for (const int G : Gs) out << ',' << format_number(cost_order_statistic(path, G));
    out << ',';
    for (Index i = 0; i < path.size(); ++i) out << (i ? ";" : "") << format_number(wf.weights(i));
    out << ',' << format_number(cost_weighted(path, wf.weights).value) << ','
        << format_number(lower_bound(path)) << '\n';
  }
  emit(flags, out.str());
}

void run_reproduce(const CommonFlags& flags, const std::string& figure) {
  ReproduceOptions options;
  const ScenarioFile file = load_scenario(flags);
  options.horizon = file.integer_or("T", options.horizon);
  options.replications = static_cast<int>(file.integer_or("reps", options.replications));
  options.seed = static_cast<std::uint64_t>(file.integer_or("seed", static_cast<std::int64_t>(options.seed)));
  options.threads = static_cast<int>(file.integer_or("threads", options.threads));
  std::ostringstream out;
  write_reproduce_csv(out, reproduce(figure, options));
  emit(flags, out.str());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Flow sampling policies: solver, analysis and Monte Carlo harness", "flowsample"};
  app.require_subcommand(1);

  CommonFlags solve_flags, simulate_flags, analyze_flags, reproduce_flags;
  std::string table_path;
  std::string figure;

  auto* solve = app.add_subcommand("solve", "relative value iteration on a scenario path");
  add_common(solve, solve_flags, true);
  solve->add_option("--table", table_path, "write the greedy policy table (n1..nM,action) to this CSV");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo evaluation of the scenario policy");
  add_common(sim, simulate_flags, true);

  auto* analyze = app.add_subcommand("analyze", "closed-form costs, weights and lower bound per M");
  add_common(analyze, analyze_flags, true);

  auto* repro = app.add_subcommand("reproduce", "run a figure grid at desk scale");
  add_common(repro, reproduce_flags, false);
  repro->add_option("figure", figure, "S1, S2, S3, R1, R2, R3, R4 or G")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) run_solve(solve_flags, table_path);
    if (*sim) run_simulate(simulate_flags);
    if (*analyze) run_analyze(analyze_flags);
    if (*repro) run_reproduce(reproduce_flags, figure);
  } catch (const std::exception& e) {
    std::cerr << "flowsample: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace flowsample
