#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace flowsample {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Slot counters of a flow path, one per device (slots since the device was
/// last sampled by any flow).
using CounterState = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;

struct DeviceParams {
  double phi = 1.0;  ///< accuracy of statistics collected from the device
  double p = 0.0;    ///< per-slot probability another flow samples the device
};

/// Device chosen by the flow's controller. Stored 0-based; external
/// interfaces (CSV, CLI) print `device_number()`.
struct ActionId {
  Index index = 0;

  constexpr Index device_number() const { return index + 1; }
  static constexpr ActionId from_device_number(Index n) { return ActionId{n - 1}; }
  friend constexpr bool operator==(ActionId, ActionId) = default;
};

/// Ordered devices on one flow path (larger index is closer to the
/// destination) plus the counter cap U used by the solver.
class PathConfig {
 public:
  PathConfig(Eigen::ArrayXd phi, Eigen::ArrayXd p, int counter_cap = 10);
  explicit PathConfig(const std::vector<DeviceParams>& devices, int counter_cap = 10);

  /// phi_i = sigma^(M-i), common p.
  static PathConfig homogeneous(Index M, double sigma, double p, int counter_cap = 10);

  Index size() const { return phi_.size(); }
  const Eigen::ArrayXd& phi() const { return phi_; }
  const Eigen::ArrayXd& p() const { return p_; }
  int counter_cap() const { return counter_cap_; }
  DeviceParams device(Index i) const { return {phi_(i), p_(i)}; }

  PathConfig with_counter_cap(int counter_cap) const;

 private:
  Eigen::ArrayXd phi_;
  Eigen::ArrayXd p_;
  int counter_cap_;
};

/// phi_i = sigma^(M-i) for i = 1..M.
Eigen::ArrayXd geometric_accuracy_profile(Index M, double sigma);

CounterState zero_state(Index M);

/// Sum_i phi_i n_i.
double immediate_cost(const CounterState& state, const PathConfig& config);

/// Probability of moving from `state` to `next` when the flow samples
/// `action`. With `truncate`, increments are clipped at the counter cap.
double transition_probability(const CounterState& state, const CounterState& next,
                              ActionId action, const PathConfig& config,
                              bool truncate = false);

/// Per-device Bernoulli draws for "sampled by another flow this slot".
/// One 64-bit variate is consumed per device per slot, regardless of the
/// action, so the exogenous stream does not depend on the policy.
class ExogenousSampler {
 public:
  explicit ExogenousSampler(const Eigen::ArrayXd& p);

  Index size() const { return static_cast<Index>(thresholds_.size()); }
  bool draw(Index i, Rng& rng) const {
    const std::uint64_t u = rng();
    return always_[i] || u < thresholds_[i];
  }

 private:
  std::vector<std::uint64_t> thresholds_;
  std::vector<char> always_;
};

/// Advances `state` in place by one slot. Counters are not capped.
void step_inplace(CounterState& state, ActionId action, const ExogenousSampler& exo, Rng& rng);

CounterState step(const CounterState& state, ActionId action, const PathConfig& config, Rng& rng);

/// Throws std::invalid_argument unless `state` has one entry per device and
/// every entry is non-negative.
void check_state(const CounterState& state, const PathConfig& config);
void check_action(ActionId action, Index M);

}  // namespace flowsample
