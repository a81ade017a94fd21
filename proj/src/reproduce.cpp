#include "flowsample/reproduce.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "flowsample/analysis.hpp"
#include "flowsample/harness.hpp"
#include "flowsample/policies.hpp"
#include "flowsample/solver.hpp"

namespace flowsample {

namespace {

constexpr double kNone = std::numeric_limits<double>::quiet_NaN();
constexpr int kSolverCap = 10;
constexpr int kMaxSolverCap = 60;
constexpr double kCapTolerance = 1e-4;

const std::vector<double> kS1Grid = {0.025, 0.05, 0.1, 0.15, 0.2};
const std::vector<Index> kS2Grid = {5, 10, 20, 50, 100, 200};
const std::vector<double> kS3Grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
const std::vector<double> kRandomGrid = {0.1, 0.2, 0.3, 0.4, 0.5};
const std::vector<double> kHomogeneousGrid = {0.1, 0.2, 0.3, 0.4, 0.5};
const std::vector<double> kR34Sigmas = {0.2, 0.5, 0.8};

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Estimate run(const PathConfig& path, const PolicySpec& policy, const ReproduceOptions& options) {
  ScenarioSpec spec = ScenarioSpec::with_default_burn_in(path, policy, options.horizon,
                                                         options.replications, options.seed);
  spec.threads = options.threads;
  const SimulationReport report = simulate(spec);
  return {report.mean_cost, report.cost_stderr};
}

ReproduceRow row(const std::string& figure, double M, double sigma, double p, std::string policy,
                 std::string metric, double analytic, double simulated, double stderr_) {
  return ReproduceRow{figure, M, sigma, p, std::move(policy), std::move(metric), analytic, simulated, stderr_};
}

/// Solves with the counter cap raised in steps of 10 until the gain moves by
/// less than kCapTolerance (relative).
std::shared_ptr<const RviSolution> solve_untruncated(const PathConfig& path) {
  auto solution = std::make_shared<const RviSolution>(relative_value_iteration(path));
  for (int cap = path.counter_cap() + 10; cap <= kMaxSolverCap; cap += 10) {
    auto next = std::make_shared<const RviSolution>(relative_value_iteration(path.with_counter_cap(cap)));
    const double change = std::abs(next->gain - solution->gain) / std::max(next->gain, 1e-12);
    solution = std::move(next);
    if (change < kCapTolerance) break;
  }
  return solution;
}

PathConfig homogeneous(Index M, double sigma, double p) {
  return PathConfig(geometric_accuracy_profile(M, sigma), Eigen::ArrayXd::Constant(M, p), kSolverCap);
}

std::vector<ReproduceRow> figure_s1(const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const Index M = 3;
  const double sigma = 0.8;
  for (const double p : kS1Grid) {
    const PathConfig path = homogeneous(M, sigma, p);
    auto solution = solve_untruncated(path);
    const Estimate opt = run(path, TablePolicy{solution}, options);
    const Estimate whittle = run(path, WhittlePolicy{}, options);
    const Estimate uniform = run(path, UniformPolicy{}, options);
    rows.push_back(row("S1", M, sigma, p, "optimal", "mean_cost", solution->gain, opt.mean, opt.stderr_));
    rows.push_back(row("S1", M, sigma, p, "whittle", "mean_cost", kNone, whittle.mean, whittle.stderr_));
    rows.push_back(row("S1", M, sigma, p, "uniform", "mean_cost", cost_uniform(path), uniform.mean,
                       uniform.stderr_));
    rows.push_back(row("S1", M, sigma, p, "lower-bound", "mean_cost", lower_bound(path), kNone, kNone));
  }
  return rows;
}

std::vector<ReproduceRow> figure_s2(const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const double sigma = 0.8;
  const double p = 0.1;
  for (const Index M : kS2Grid) {
    const PathConfig path = homogeneous(M, sigma, p);
    const auto m = static_cast<double>(M);
    const Estimate uniform = run(path, UniformPolicy{}, options);
    rows.push_back(row("S2", m, sigma, p, "uniform", "mean_cost", cost_uniform(path), uniform.mean,
                       uniform.stderr_));
    for (const int G : {2, 3}) {
      const Estimate os = run(path, OrderStatisticPolicy{G}, options);
      rows.push_back(row("S2", m, sigma, p, "order-statistic-G" + std::to_string(G), "mean_cost",
                         cost_order_statistic(path, G), os.mean, os.stderr_));
    }
    const WaterFillingResult wf = water_filling(path);
    const Estimate weighted = run(path, WeightedPolicy{wf.weights}, options);
    rows.push_back(row("S2", m, sigma, p, "weighted", "mean_cost", cost_weighted(path, wf.weights).value,
                       weighted.mean, weighted.stderr_));
    const Estimate whittle = run(path, WhittlePolicy{}, options);
    rows.push_back(row("S2", m, sigma, p, "whittle", "mean_cost", kNone, whittle.mean, whittle.stderr_));
    rows.push_back(row("S2", m, sigma, p, "lower-bound", "mean_cost", lower_bound(path), kNone, kNone));
  }
  return rows;
}

std::vector<ReproduceRow> figure_s3(const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const Index M = 40;
  const double sigma = 0.8;
  const double pi0 = 0.01;
  for (const double pi1 : kS3Grid) {
    Eigen::ArrayXd p(M);
    for (Index i = 0; i < M; ++i) p(i) = (i % 2 == 0) ? pi0 : pi1;
    const PathConfig path(geometric_accuracy_profile(M, sigma), p, kSolverCap);
    const Estimate whittle = run(path, WhittlePolicy{}, options);
    const Estimate second = run(path, SecondOrderPolicy{}, options);
    const Estimate heuristic = run(path, HeuristicPolicy{}, options);
    rows.push_back(row("S3", M, sigma, pi1, "whittle", "mean_cost", kNone, whittle.mean, whittle.stderr_));
    rows.push_back(row("S3", M, sigma, pi1, "second-order", "mean_cost", kNone, second.mean, second.stderr_));
    rows.push_back(row("S3", M, sigma, pi1, "heuristic", "mean_cost", kNone, heuristic.mean,
                       heuristic.stderr_));
  }
  return rows;
}

/// Averages over `parameter_draws` random p profiles, one replication each.
std::vector<ReproduceRow> figure_random(const std::string& figure, double sigma,
                                        const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const Index M = 3;
  const int draws = options.parameter_draws;
  for (std::size_t g = 0; g < kRandomGrid.size(); ++g) {
    const double p_max = kRandomGrid[g];
    Rng layout = derive_stream(options.seed, g, 0, StreamTag::Layout);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double gain = 0.0, opt = 0.0, opt_var = 0.0, whittle = 0.0, whittle_var = 0.0;
    double uniform = 0.0, bound = 0.0;
    for (int d = 0; d < draws; ++d) {
      Eigen::ArrayXd p(M);
      for (Index i = 0; i < M; ++i) p(i) = p_max * (1.0 - u(layout));
      const PathConfig path(geometric_accuracy_profile(M, sigma), p, kSolverCap);
      auto solution = solve_untruncated(path);
      ReproduceOptions single = options;
      single.replications = 1;
      single.seed = options.seed + static_cast<std::uint64_t>(d);
      const Estimate o = run(path, TablePolicy{solution}, single);
      const Estimate w = run(path, WhittlePolicy{}, single);
      gain += solution->gain;
      opt += o.mean;
      opt_var += o.stderr_ * o.stderr_;
      whittle += w.mean;
      whittle_var += w.stderr_ * w.stderr_;
      uniform += cost_uniform(path);
      bound += lower_bound(path);
    }
    const double n = draws;
    rows.push_back(row(figure, M, sigma, p_max, "optimal", "mean_cost", gain / n, opt / n, std::sqrt(opt_var) / n));
    rows.push_back(row(figure, M, sigma, p_max, "whittle", "mean_cost", kNone, whittle / n,
                       std::sqrt(whittle_var) / n));
    rows.push_back(row(figure, M, sigma, p_max, "uniform", "mean_cost", uniform / n, kNone, kNone));
    rows.push_back(row(figure, M, sigma, p_max, "lower-bound", "mean_cost", bound / n, kNone, kNone));
  }
  return rows;
}

std::vector<ReproduceRow> figure_homogeneous(const std::string& figure, Index M,
                                             const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  for (const double sigma : kR34Sigmas) {
    for (const double p : kHomogeneousGrid) {
      const PathConfig path = homogeneous(M, sigma, p);
      const Estimate whittle = run(path, WhittlePolicy{}, options);
      const Estimate second = run(path, SecondOrderPolicy{}, options);
      rows.push_back(row(figure, M, sigma, p, "whittle", "mean_cost", kNone, whittle.mean, whittle.stderr_));
      rows.push_back(row(figure, M, sigma, p, "second-order", "mean_cost", kNone, second.mean,
                         second.stderr_));
    }
  }
  return rows;
}

std::vector<ReproduceRow> figure_g(const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const std::vector<std::pair<std::string, PolicySpec>> policies = {
      {"uniform", UniformPolicy{}},
      {"order-statistic-G2", OrderStatisticPolicy{2}},
      {"whittle", WhittlePolicy{}},
      {"second-order", SecondOrderPolicy{}}};
  for (const auto& [name, policy] : policies) {
    CrosspointSpec spec;
    spec.policy = policy;
    spec.seed = options.seed;
    spec.target_samples = options.crosspoint_samples;
    spec.horizon = 200 * options.crosspoint_samples;
    const CrosspointResult result = simulate_crosspoint(spec);
    const GeometricFit fit = geometric_fit(result.intersample_times);
    const double mean_length =
        std::accumulate(result.lengths.begin(), result.lengths.end(), 0.0) / static_cast<double>(result.lengths.size());

    // Per-slot probability that some flow samples the crosspoint, when each
    // flow's choice is state independent.
    double analytic = kNone;
    if (name == "uniform" || name == "order-statistic-G2") {
      double miss = 1.0;
      for (std::size_t k = 0; k < result.lengths.size(); ++k) {
        const Index m = result.lengths[k];
        const double q = name == "uniform" ? 1.0 / static_cast<double>(m)
                                           : order_statistic_probabilities(m, 2)(result.positions[k] - 1);
        miss *= 1.0 - q;
      }
      analytic = 1.0 - miss;
    }
    const double sample_se = std::sqrt(fit.p_hat * (1.0 - fit.p_hat) / static_cast<double>(fit.sample_count));
    rows.push_back(row("G", mean_length, spec.sigma, spec.index_p, name, "p_hat", analytic, fit.p_hat, sample_se));
    rows.push_back(row("G", mean_length, spec.sigma, spec.index_p, name, "tv_distance", kNone, fit.tv_distance, kNone));
    rows.push_back(row("G", mean_length, spec.sigma, spec.index_p, name, "samples", kNone,
                       static_cast<double>(fit.sample_count), kNone));
  }
  return rows;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids = {"S1", "S2", "S3", "R1", "R2", "R3", "R4", "G"};
  return ids;
}

std::vector<ReproduceRow> reproduce(const std::string& figure, const ReproduceOptions& options) {
  if (options.horizon < 10 || options.replications < 1 || options.parameter_draws < 1) {
    throw std::invalid_argument("reproduce: horizon >= 10, replications >= 1 and parameter_draws >= 1 required");
  }
  if (figure == "S1") return figure_s1(options);
  if (figure == "S2") return figure_s2(options);
  if (figure == "S3") return figure_s3(options);
  if (figure == "R1") return figure_random("R1", 0.1, options);
  if (figure == "R2") return figure_random("R2", 0.8, options);
  if (figure == "R3") return figure_homogeneous("R3", 5, options);
  if (figure == "R4") return figure_homogeneous("R4", 40, options);
  if (figure == "G") return figure_g(options);
  throw std::invalid_argument("unknown figure id '" + figure + "' (expected S1, S2, S3, R1, R2, R3, R4 or G)");
}

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.10g", value);
  return buffer;
}

void write_reproduce_csv(std::ostream& out, const std::vector<ReproduceRow>& rows) {
  out << "# schema=1\n";
  out << "figure,M,sigma,p,policy,metric,analytic,simulated,stderr\n";
  for (const auto& r : rows) {
    out << r.figure << ',' << format_number(r.M) << ',' << format_number(r.sigma) << ','
        << format_number(r.p) << ',' << r.policy << ',' << r.metric << ',' << format_number(r.analytic)
        << ',' << format_number(r.simulated) << ',' << format_number(r.stderr_) << '\n';
  }
}

}  // namespace flowsample
