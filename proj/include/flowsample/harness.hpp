#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "flowsample/model.hpp"
#include "flowsample/policies.hpp"

namespace flowsample {

/// Stream tags mixed into every derived seed.
enum class StreamTag : std::uint32_t { Dynamics = 0, Policy = 1, Layout = 2 };

/// Seeds an engine from (master, replication, flow, tag) through
/// std::seed_seq, so every replication and flow owns an independent stream
/// regardless of scheduling.
Rng derive_stream(std::uint64_t master, std::uint64_t replication, std::uint64_t flow,
                  StreamTag tag);

struct ScenarioSpec {
  PathConfig path;
  PolicySpec policy = UniformPolicy{};
  std::int64_t horizon = 1'000'000;
  int replications = 1;
  std::int64_t burn_in = 100'000;  ///< slots excluded from averaging
  std::uint64_t seed = 1;
  int threads = 1;

  /// burn_in = 10% of horizon.
  static ScenarioSpec with_default_burn_in(PathConfig path, PolicySpec policy, std::int64_t horizon,
                                           int replications, std::uint64_t seed);
};

/// Inter-sampling times above this are pooled into the last bin.
inline constexpr std::size_t kHistogramBins = 4096;

struct SimulationReport {
  double mean_cost = 0.0;
  double cost_stderr = 0.0;
  Eigen::ArrayXd per_device_sampling_rate;  ///< this flow's actions only
  Eigen::ArrayXd per_device_reset_rate;     ///< resets by any cause
  /// intersample_histograms[i][z] = count of gaps of z slots (z >= 1) for
  /// device i; the last bin collects gaps >= kHistogramBins - 1.
  std::vector<std::vector<std::uint64_t>> intersample_histograms;
  std::vector<double> replication_means;
  std::uint64_t seed = 0;
  std::int64_t burn_in = 0;
  std::int64_t slots_simulated = 0;
};

/// Runs independent replications from the all-zeros state and averages the
/// immediate cost after burn-in. Deterministic given the spec (thread count
/// does not change the result).
SimulationReport simulate(const ScenarioSpec& spec);

/// What each flow's controller sees of the crosspoint counter.
enum class CrosspointView {
  PerFlow,  ///< slots since this flow last sampled it
  Shared,   ///< slots since any flow sampled it
};

struct CrosspointSpec {
  int flow_count = 20;
  int min_length = 3;
  int max_length = 200;
  PolicySpec policy = UniformPolicy{};
  std::int64_t horizon = 1'000'000;     ///< hard cap on simulated slots
  std::int64_t target_samples = 0;      ///< stop early once this many gaps are recorded (0: run to horizon)
  std::uint64_t seed = 1;
  double sigma = 0.9;                   ///< accuracy profile used by every flow's policy
  double index_p = 0.3;                 ///< p assumed by the flows' index policies
  double background_p = 0.3;            ///< exogenous sampling of non-crosspoint devices
  CrosspointView view = CrosspointView::PerFlow;
  /// Optional fixed layout; when non-empty these override the random draws
  /// (1-based positions).
  std::vector<int> lengths;
  std::vector<int> positions;
};

struct CrosspointResult {
  std::vector<std::int64_t> intersample_times;
  std::vector<int> lengths;
  std::vector<int> positions;  ///< 1-based crosspoint position on each flow
  std::int64_t slots_simulated = 0;
};

/// K flows sharing one device. Each flow's controller applies its policy to
/// its own path; the shared device resets whenever any flow samples it, and
/// the recorded gaps are between those resets. Non-crosspoint devices see
/// Bernoulli(background_p) exogenous resets.
CrosspointResult simulate_crosspoint(const CrosspointSpec& spec);

}  // namespace flowsample
