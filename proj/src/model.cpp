#include "flowsample/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowsample {

namespace {

void check_unit_interval(const Eigen::ArrayXd& values, const char* name) {
  for (Index i = 0; i < values.size(); ++i) {
    if (!(values(i) >= 0.0 && values(i) <= 1.0)) {
      throw std::invalid_argument(std::string(name) + "[" + std::to_string(i + 1) +
                                  "] must lie in [0,1], got " + std::to_string(values(i)));
    }
  }
}

}  // namespace

PathConfig::PathConfig(Eigen::ArrayXd phi, Eigen::ArrayXd p, int counter_cap)
    : phi_(std::move(phi)), p_(std::move(p)), counter_cap_(counter_cap) {
  if (phi_.size() < 1) throw std::invalid_argument("a flow path needs at least one device");
  if (phi_.size() != p_.size()) {
    throw std::invalid_argument("phi and p must have the same length");
  }
  if (counter_cap_ < 1) throw std::invalid_argument("counter cap U must be >= 1");
  check_unit_interval(phi_, "phi");
  check_unit_interval(p_, "p");
  if ((phi_ == 0.0).all()) {
    throw std::invalid_argument("at least one device needs phi > 0");
  }
}

PathConfig::PathConfig(const std::vector<DeviceParams>& devices, int counter_cap)
    : PathConfig(
          [&] {
            Eigen::ArrayXd v(static_cast<Index>(devices.size()));
            for (std::size_t i = 0; i < devices.size(); ++i) v(static_cast<Index>(i)) = devices[i].phi;
            return v;
          }(),
          [&] {
            Eigen::ArrayXd v(static_cast<Index>(devices.size()));
            for (std::size_t i = 0; i < devices.size(); ++i) v(static_cast<Index>(i)) = devices[i].p;
            return v;
          }(),
          counter_cap) {}

PathConfig PathConfig::homogeneous(Index M, double sigma, double p, int counter_cap) {
  return PathConfig(geometric_accuracy_profile(M, sigma), Eigen::ArrayXd::Constant(M, p),
                    counter_cap);
}

PathConfig PathConfig::with_counter_cap(int counter_cap) const {
  return PathConfig(phi_, p_, counter_cap);
}

Eigen::ArrayXd geometric_accuracy_profile(Index M, double sigma) {
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("sigma must lie in (0,1]");
  Eigen::ArrayXd phi(M);
  for (Index i = 0; i < M; ++i) phi(i) = std::pow(sigma, static_cast<double>(M - 1 - i));
  return phi;
}

CounterState zero_state(Index M) { return CounterState::Zero(M); }

void check_state(const CounterState& state, const PathConfig& config) {
  if (state.size() != config.size()) {
    throw std::invalid_argument("state has " + std::to_string(state.size()) +
                                " counters but the path has " + std::to_string(config.size()) +
                                " devices");
  }
  if ((state < 0).any()) throw std::invalid_argument("counters must be non-negative");
}

void check_action(ActionId action, Index M) {
  if (action.index < 0 || action.index >= M) {
    throw std::out_of_range("action device " + std::to_string(action.device_number()) +
                            " outside 1.." + std::to_string(M));
  }
}

double immediate_cost(const CounterState& state, const PathConfig& config) {
  check_state(state, config);
  return (config.phi() * state.cast<double>()).sum();
}

double transition_probability(const CounterState& state, const CounterState& next,
                              ActionId action, const PathConfig& config, bool truncate) {
  check_state(state, config);
  check_state(next, config);
  check_action(action, config.size());
  if (next(action.index) != 0) return 0.0;
  const std::int64_t cap = config.counter_cap();
  double prob = 1.0;
  for (Index i = 0; i < config.size(); ++i) {
    if (i == action.index) continue;
    const std::int64_t incremented = truncate ? std::min(state(i) + 1, cap) : state(i) + 1;
    double factor = 0.0;
    if (next(i) == 0) factor += config.p()(i);
    if (next(i) == incremented) factor += 1.0 - config.p()(i);
    prob *= factor;
    if (prob == 0.0) return 0.0;
  }
  return prob;
}

ExogenousSampler::ExogenousSampler(const Eigen::ArrayXd& p)
    : thresholds_(static_cast<std::size_t>(p.size())), always_(static_cast<std::size_t>(p.size())) {
  for (Index i = 0; i < p.size(); ++i) {
    always_[i] = p(i) >= 1.0;
    thresholds_[i] = always_[i] ? 0 : static_cast<std::uint64_t>(std::ldexp(p(i), 64));
  }
}

void step_inplace(CounterState& state, ActionId action, const ExogenousSampler& exo, Rng& rng) {
  const Index M = state.size();
  for (Index i = 0; i < M; ++i) {
    const bool exogenous = exo.draw(i, rng);
    state(i) = (i == action.index || exogenous) ? 0 : state(i) + 1;
  }
}

CounterState step(const CounterState& state, ActionId action, const PathConfig& config, Rng& rng) {
  check_state(state, config);
  check_action(action, config.size());
  CounterState next = state;
  step_inplace(next, action, ExogenousSampler(config.p()), rng);
  return next;
}

}  // namespace flowsample
