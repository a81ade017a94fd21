#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "flowsample/indices.hpp"
#include "flowsample/model.hpp"
#include "flowsample/solver.hpp"

namespace flowsample {

inline constexpr double kDefaultHeuristicThreshold = 0.3;

struct UniformPolicy {};
struct OrderStatisticPolicy {
  int G = 2;
};
/// Empty weights mean "derive from water-filling on the path".
struct WeightedPolicy {
  Eigen::ArrayXd weights;
};
struct WhittlePolicy {};
struct SecondOrderPolicy {};
struct FirstOrderPolicy {};
struct HeuristicPolicy {
  double threshold_p = kDefaultHeuristicThreshold;
};
struct TablePolicy {
  std::shared_ptr<const RviSolution> solution;
};

using PolicySpec = std::variant<UniformPolicy, OrderStatisticPolicy, WeightedPolicy, WhittlePolicy,
                                SecondOrderPolicy, FirstOrderPolicy, HeuristicPolicy, TablePolicy>;

/// CLI/config name: uniform, order-statistic, weighted, whittle,
/// second-order, first-order, heuristic, optimal.
std::string policy_name(const PolicySpec& spec);

enum class IndexKind { Whittle, SecondOrder, FirstOrder, Heuristic };

struct IndexRule {
  IndexKind kind = IndexKind::Whittle;
  double threshold_p = kDefaultHeuristicThreshold;  ///< Heuristic only
};

struct IndexValue {
  double value = 0.0;
  ActionId device;
};

/// Index of one device at counter n under `rule`.
double device_index(const IndexRule& rule, std::int64_t n, const DeviceParams& device);

/// Index of every device at its current counter.
std::vector<IndexValue> device_indices(const CounterState& state, const PathConfig& config,
                                       const IndexRule& rule);

/// Order-statistic sampling probabilities q_i = (i^G - (i-1)^G) / M^G.
Eigen::ArrayXd order_statistic_probabilities(Index M, int G);

/// Throws std::invalid_argument unless weights are non-negative and sum to 1
/// within 1e-9.
void check_weights(const Eigen::ArrayXd& weights);

ActionId choose_uniform(Index M, Rng& rng);
ActionId choose_order_statistic(Index M, int G, Rng& rng);
ActionId choose_weighted(const Eigen::ArrayXd& weights, Rng& rng);

/// Argmax of the per-device index. Ties: larger phi, then larger counter,
/// then smaller device index.
ActionId choose_by_index(const CounterState& state, const PathConfig& config, const IndexRule& rule);

ActionId choose_from_table(const CounterState& state, const RviSolution& solution);

/// A policy bound to one path, with per-path precomputation (index tables,
/// resolved weights). `choose` is const and thread-safe given a per-thread
/// random source.
class SamplingPolicy {
 public:
  SamplingPolicy(const PolicySpec& spec, const PathConfig& config);

  ActionId choose(const CounterState& state, Rng& rng) const;

  const PolicySpec& spec() const { return spec_; }
  /// Resolved weights for the weighted policy, empty otherwise.
  const Eigen::ArrayXd& weights() const { return weights_; }

 private:
  ActionId choose_indexed(const CounterState& state) const;

  PolicySpec spec_;
  PathConfig config_;
  Eigen::ArrayXd weights_;
  std::vector<double> cdf_;
  std::vector<Index> order_by_priority_;
  IndexRule rule_;
  bool indexed_ = false;
  // index_table_(n, i) for n < table rows; larger counters computed directly.
  Eigen::ArrayXXd index_table_;
};

}  // namespace flowsample
