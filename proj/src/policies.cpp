#include "flowsample/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "flowsample/analysis.hpp"

namespace flowsample {

namespace {

constexpr Index kIndexTableRows = 256;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

double canonical(Rng& rng) { return std::generate_canonical<double, 64>(rng); }

Index uniform_device(Index M, Rng& rng) {
  return std::uniform_int_distribution<Index>(0, M - 1)(rng);
}

/// Inverse-CDF draw; `cdf` is the running sum of the weights.
Index draw_from_cdf(const std::vector<double>& cdf, Rng& rng) {
  const double u = canonical(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  auto idx = static_cast<Index>(it - cdf.begin());
  // Skip trailing zero-weight devices if u landed exactly on the total.
  idx = std::min<Index>(idx, static_cast<Index>(cdf.size()) - 1);
  while (idx > 0 && cdf[static_cast<std::size_t>(idx)] == cdf[static_cast<std::size_t>(idx - 1)]) --idx;
  return idx;
}

std::vector<double> cumulative(const Eigen::ArrayXd& weights) {
  std::vector<double> cdf(static_cast<std::size_t>(weights.size()));
  std::partial_sum(weights.data(), weights.data() + weights.size(), cdf.begin());
  return cdf;
}

std::vector<Index> priority_order(const PathConfig& config) {
  std::vector<Index> order(static_cast<std::size_t>(config.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return config.phi()(a) > config.phi()(b); });
  return order;
}

/// Scans devices in (phi desc, index asc) order; a later device wins on a
/// strictly larger index, or on an equal index with equal phi and a larger
/// counter.
template <class IndexFn>
ActionId argmax_index(const CounterState& state, const PathConfig& config,
                      const std::vector<Index>& order, IndexFn&& index_of) {
  Index best = order.front();
  double best_value = index_of(best);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Index i = order[k];
    const double value = index_of(i);
    if (value > best_value ||
        (value == best_value && config.phi()(i) == config.phi()(best) && state(i) > state(best))) {
      best = i;
      best_value = value;
    }
  }
  return ActionId{best};
}

}  // namespace

std::string policy_name(const PolicySpec& spec) {
  return std::visit(Overloaded{
                        [](const UniformPolicy&) { return std::string("uniform"); },
                        [](const OrderStatisticPolicy&) { return std::string("order-statistic"); },
                        [](const WeightedPolicy&) { return std::string("weighted"); },
                        [](const WhittlePolicy&) { return std::string("whittle"); },
                        [](const SecondOrderPolicy&) { return std::string("second-order"); },
                        [](const FirstOrderPolicy&) { return std::string("first-order"); },
                        [](const HeuristicPolicy&) { return std::string("heuristic"); },
                        [](const TablePolicy&) { return std::string("optimal"); },
                    },
                    spec);
}

double device_index(const IndexRule& rule, std::int64_t n, const DeviceParams& device) {
  switch (rule.kind) {
    case IndexKind::Whittle:
      return whittle_index(n, device.phi, device.p);
    case IndexKind::SecondOrder:
      return second_order_index(n, device.phi);
    case IndexKind::FirstOrder:
      return first_order_index(n, device.phi);
    case IndexKind::Heuristic:
      return device.p < rule.threshold_p ? second_order_index(n, device.phi)
                                         : first_order_index(n, device.phi);
  }
  throw std::logic_error("unknown index kind");
}

std::vector<IndexValue> device_indices(const CounterState& state, const PathConfig& config,
                                       const IndexRule& rule) {
  check_state(state, config);
  std::vector<IndexValue> out;
  out.reserve(static_cast<std::size_t>(config.size()));
  for (Index i = 0; i < config.size(); ++i) {
    out.push_back({device_index(rule, state(i), config.device(i)), ActionId{i}});
  }
  return out;
}

Eigen::ArrayXd order_statistic_probabilities(Index M, int G) {
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (G < 1) throw std::invalid_argument("G must be >= 1");
  // q_i = (i/M)^G (1 - (1 - 1/i)^G), evaluated in logs so i^G never overflows.
  Eigen::ArrayXd q(M);
  const double g = G;
  const double log_m = std::log(static_cast<double>(M));
  for (Index i = 1; i <= M; ++i) {
    const double di = static_cast<double>(i);
    const double head = std::exp(g * (std::log(di) - log_m));
    const double tail = i == 1 ? 1.0 : -std::expm1(g * std::log1p(-1.0 / di));
    q(i - 1) = head * tail;
  }
  return q;
}

void check_weights(const Eigen::ArrayXd& weights) {
  if (weights.size() == 0) throw std::invalid_argument("weights are empty");
  if (!weights.allFinite() || (weights < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and non-negative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("weights must sum to 1 (got " + std::to_string(weights.sum()) + ")");
  }
}

ActionId choose_uniform(Index M, Rng& rng) {
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  return ActionId{uniform_device(M, rng)};
}

ActionId choose_order_statistic(Index M, int G, Rng& rng) {
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (G < 1) throw std::invalid_argument("G must be >= 1");
  Index best = 0;
  for (int g = 0; g < G; ++g) best = std::max(best, uniform_device(M, rng));
  return ActionId{best};
}

ActionId choose_weighted(const Eigen::ArrayXd& weights, Rng& rng) {
  check_weights(weights);
  return ActionId{draw_from_cdf(cumulative(weights), rng)};
}

ActionId choose_by_index(const CounterState& state, const PathConfig& config, const IndexRule& rule) {
  check_state(state, config);
  return argmax_index(state, config, priority_order(config),
                      [&](Index i) { return device_index(rule, state(i), config.device(i)); });
}

ActionId choose_from_table(const CounterState& state, const RviSolution& solution) {
  check_state(state, solution.config);
  const ActionId a = solution.action(state);
  if (a.index < 0 || a.index >= solution.config.size()) {
    throw std::logic_error("policy table holds an invalid action");
  }
  return a;
}

SamplingPolicy::SamplingPolicy(const PolicySpec& spec, const PathConfig& config)
    : spec_(spec), config_(config) {
  std::visit(Overloaded{
                 [](const UniformPolicy&) {},
                 [](const OrderStatisticPolicy& s) {
                   if (s.G < 1) throw std::invalid_argument("order-statistic G must be >= 1");
                 },
                 [&](const WeightedPolicy& s) {
                   weights_ = s.weights.size() == 0 ? water_filling(config_).weights : s.weights;
                   if (weights_.size() != config_.size()) {
                     throw std::invalid_argument("weights length does not match the path");
                   }
                   check_weights(weights_);
                   cdf_ = cumulative(weights_);
                 },
                 [&](const WhittlePolicy&) { rule_ = {IndexKind::Whittle}; },
                 [&](const SecondOrderPolicy&) { rule_ = {IndexKind::SecondOrder}; },
                 [&](const FirstOrderPolicy&) { rule_ = {IndexKind::FirstOrder}; },
                 [&](const HeuristicPolicy& s) {
                   if (!(s.threshold_p >= 0.0 && s.threshold_p <= 1.0)) {
                     throw std::invalid_argument("heuristic p-bar must lie in [0,1]");
                   }
                   rule_ = {IndexKind::Heuristic, s.threshold_p};
                 },
                 [&](const TablePolicy& s) {
                   if (!s.solution) throw std::invalid_argument("optimal policy needs a solver run");
                   if (s.solution->config.size() != config_.size()) {
                     throw std::invalid_argument("policy table was solved for a different path");
                   }
                 },
             },
             spec_);

  indexed_ = std::holds_alternative<WhittlePolicy>(spec_) ||
             std::holds_alternative<SecondOrderPolicy>(spec_) ||
             std::holds_alternative<FirstOrderPolicy>(spec_) ||
             std::holds_alternative<HeuristicPolicy>(spec_);
  if (indexed_) {
    order_by_priority_ = priority_order(config_);
    index_table_.resize(kIndexTableRows, config_.size());
    for (Index i = 0; i < config_.size(); ++i) {
      for (Index n = 0; n < kIndexTableRows; ++n) {
        index_table_(n, i) = device_index(rule_, n, config_.device(i));
      }
    }
  }
}

ActionId SamplingPolicy::choose_indexed(const CounterState& state) const {
  return argmax_index(state, config_, order_by_priority_, [&](Index i) {
    const std::int64_t n = state(i);
    return n < kIndexTableRows ? index_table_(n, i) : device_index(rule_, n, config_.device(i));
  });
}

ActionId SamplingPolicy::choose(const CounterState& state, Rng& rng) const {
  if (indexed_) return choose_indexed(state);
  return std::visit(Overloaded{
                        [&](const UniformPolicy&) { return ActionId{uniform_device(config_.size(), rng)}; },
                        [&](const OrderStatisticPolicy& s) {
                          return choose_order_statistic(config_.size(), s.G, rng);
                        },
                        [&](const WeightedPolicy&) { return ActionId{draw_from_cdf(cdf_, rng)}; },
                        [&](const TablePolicy& s) { return s.solution->action(state); },
                        [](const auto&) -> ActionId { throw std::logic_error("unreachable"); },
                    },
                    spec_);
}

}  // namespace flowsample
