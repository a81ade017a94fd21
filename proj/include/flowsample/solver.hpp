#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowsample/model.hpp"

namespace flowsample {

class StateSpaceTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double final_span)
      : std::runtime_error(what), final_span_(final_span) {}
  double final_span() const { return final_span_; }

 private:
  double final_span_;
};

/// Mixed-radix enumeration of the truncated state space {0..U}^M. Device 1
/// is the most significant digit, so the all-zeros state has id 0.
class StateSpace {
 public:
  StateSpace(Index devices, int counter_cap);

  Index devices() const { return devices_; }
  int counter_cap() const { return cap_; }
  Index size() const { return size_; }
  Index stride(Index device) const { return strides_[static_cast<std::size_t>(device)]; }

  /// Counters above the cap are clipped before encoding.
  Index encode(const CounterState& state) const;
  CounterState decode(Index id) const;

 private:
  Index devices_;
  int cap_;
  Index size_;
  std::vector<Index> strides_;
};

/// Number of truncated states (U+1)^M, or -1 if it exceeds `limit`.
Index truncated_state_count(Index devices, int counter_cap, Index limit);

struct BellmanResult {
  Eigen::VectorXd values;
  Eigen::VectorXi greedy;  ///< 0-based device index of the argmin (ties -> smallest)
};

/// One application of the average-cost Bellman operator on the truncated MDP.
BellmanResult bellman_apply(const Eigen::VectorXd& h, const PathConfig& config);

struct RviOptions {
  double epsilon = 1e-6;
  int max_iterations = 100000;
  Index max_states = 10'000'000;
};

struct RviSolution {
  PathConfig config;
  Eigen::VectorXd h;       ///< relative values, h[reference_state] == 0
  double gain = 0.0;
  Eigen::VectorXi policy;  ///< greedy action per truncated state (0-based)
  double epsilon = 0.0;
  double final_span = 0.0;
  int iterations = 0;
  Index reference_state = 0;

  StateSpace state_space() const { return {config.size(), config.counter_cap()}; }
  /// Greedy action for `state`, counters clipped to the cap first.
  ActionId action(const CounterState& state) const;
};

RviSolution relative_value_iteration(const PathConfig& config, const RviOptions& options = {});

struct DecoupledOptions {
  double epsilon = 1e-9;
  int max_iterations = 1'000'000;
};

/// Single-device problem with sampling cost c, solved on {0..U}.
struct DecoupledSolution {
  Eigen::VectorXd h;          ///< h[0] == 0
  double gain = 0.0;
  int threshold = 0;          ///< smallest n whose greedy action is "sample"
  bool saturated = false;     ///< no sampling below the cap; threshold reported as U
  double sampling_cost = 0.0;
  int iterations = 0;
  std::vector<bool> sample;   ///< greedy action per counter value
};

DecoupledSolution solve_decoupled(double phi, double p, double c, int counter_cap,
                                  const DecoupledOptions& options = {});

int threshold_of(double phi, double p, double c, int counter_cap,
                 const DecoupledOptions& options = {});

/// Recovers the Whittle index at counter n by bisecting on the sampling cost
/// until the decoupled threshold crosses n. Throws std::runtime_error if no
/// bracketing cost exists below the cap.
double empirical_whittle(std::int64_t n, double phi, double p, int counter_cap,
                         const DecoupledOptions& options = {});

}  // namespace flowsample
