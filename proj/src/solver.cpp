#include "flowsample/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowsample {

Index truncated_state_count(Index devices, int counter_cap, Index limit) {
  Index count = 1;
  for (Index i = 0; i < devices; ++i) {
    if (count > limit / (counter_cap + 1)) return -1;
    count *= counter_cap + 1;
  }
  return count > limit ? -1 : count;
}

StateSpace::StateSpace(Index devices, int counter_cap)
    : devices_(devices), cap_(counter_cap), strides_(static_cast<std::size_t>(devices)) {
  if (devices < 1 || counter_cap < 1) throw std::invalid_argument("empty state space");
  size_ = truncated_state_count(devices, counter_cap, std::numeric_limits<Index>::max() / 2);
  if (size_ < 0) throw StateSpaceTooLarge("state space does not fit in an index");
  Index stride = 1;
  for (Index i = devices - 1; i >= 0; --i) {
    strides_[static_cast<std::size_t>(i)] = stride;
    stride *= cap_ + 1;
  }
}

Index StateSpace::encode(const CounterState& state) const {
  if (state.size() != devices_) throw std::invalid_argument("state dimension mismatch");
  Index id = 0;
  for (Index i = 0; i < devices_; ++i) {
    const auto n = std::clamp<std::int64_t>(state(i), 0, cap_);
    id += static_cast<Index>(n) * strides_[static_cast<std::size_t>(i)];
  }
  return id;
}

CounterState StateSpace::decode(Index id) const {
  if (id < 0 || id >= size_) throw std::out_of_range("state id out of range");
  CounterState state(devices_);
  for (Index i = 0; i < devices_; ++i) {
    const Index s = strides_[static_cast<std::size_t>(i)];
    state(i) = id / s;
    id %= s;
  }
  return state;
}

namespace {

/// Enumerates next-state ids and probabilities for one (state, action) pair.
/// `increments[i]` is the id offset of device i after an increment (clipped),
/// a reset contributes 0.
class OutcomeExpander {
 public:
  explicit OutcomeExpander(Index devices)
      : offsets_(std::size_t{1} << std::max<Index>(devices - 1, 0)),
        probs_(offsets_.size()) {}

  double expectation(const Eigen::VectorXd& h, const std::vector<Index>& increments,
                     const Eigen::ArrayXd& p, Index action) {
    std::size_t count = 1;
    offsets_[0] = 0;
    probs_[0] = 1.0;
    for (Index i = 0; i < static_cast<Index>(increments.size()); ++i) {
      if (i == action) continue;
      const double reset = p(i);
      const double keep = 1.0 - reset;
      const Index inc = increments[static_cast<std::size_t>(i)];
      if (reset == 0.0) {
        for (std::size_t k = 0; k < count; ++k) offsets_[k] += inc;
      } else if (keep != 0.0) {
        for (std::size_t k = 0; k < count; ++k) {
          offsets_[count + k] = offsets_[k] + inc;
          probs_[count + k] = probs_[k] * keep;
          probs_[k] *= reset;
        }
        count *= 2;
      }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) sum += probs_[k] * h(offsets_[k]);
    return sum;
  }

 private:
  std::vector<Index> offsets_;
  std::vector<double> probs_;
};

}  // namespace

BellmanResult bellman_apply(const Eigen::VectorXd& h, const PathConfig& config) {
  const StateSpace space(config.size(), config.counter_cap());
  if (h.size() != space.size()) {
    throw std::invalid_argument("value map covers " + std::to_string(h.size()) +
                                " states, expected " + std::to_string(space.size()));
  }
  const Index M = config.size();
  const int U = config.counter_cap();
  BellmanResult out{Eigen::VectorXd(space.size()), Eigen::VectorXi(space.size())};
  OutcomeExpander expander(M);
  std::vector<std::int64_t> digits(static_cast<std::size_t>(M), 0);
  std::vector<Index> increments(static_cast<std::size_t>(M));

  for (Index id = 0; id < space.size(); ++id) {
    double cost = 0.0;
    for (Index i = 0; i < M; ++i) {
      const auto n = digits[static_cast<std::size_t>(i)];
      cost += config.phi()(i) * static_cast<double>(n);
      increments[static_cast<std::size_t>(i)] =
          space.stride(i) * static_cast<Index>(std::min<std::int64_t>(n + 1, U));
    }
    double best = std::numeric_limits<double>::infinity();
    int best_action = 0;
    for (Index a = 0; a < M; ++a) {
      const double value = expander.expectation(h, increments, config.p(), a);
      if (value < best) {
        best = value;
        best_action = static_cast<int>(a);
      }
    }
    out.values(id) = cost + best;
    out.greedy(id) = best_action;

    for (Index i = M - 1; i >= 0; --i) {
      auto& d = digits[static_cast<std::size_t>(i)];
      if (++d <= U) break;
      d = 0;
    }
  }
  return out;
}

ActionId RviSolution::action(const CounterState& state) const {
  return ActionId{policy(state_space().encode(state))};
}

RviSolution relative_value_iteration(const PathConfig& config, const RviOptions& options) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const Index states = truncated_state_count(config.size(), config.counter_cap(), options.max_states);
  if (states < 0) {
    throw StateSpaceTooLarge("(U+1)^M exceeds the state budget of " +
                             std::to_string(options.max_states));
  }
  constexpr Index kReference = 0;

  Eigen::VectorXd h = Eigen::VectorXd::Zero(states);
  double span = std::numeric_limits<double>::infinity();
  int iterations = 0;
  while (span > options.epsilon) {
    if (iterations >= options.max_iterations) {
      throw NonConvergence("relative value iteration did not converge in " +
                               std::to_string(options.max_iterations) +
                               " iterations (span " + std::to_string(span) + ")",
                           span);
    }
    BellmanResult t = bellman_apply(h, config);
    t.values.array() -= t.values(kReference);
    const Eigen::VectorXd d = t.values - h;
    span = d.maxCoeff() - d.minCoeff();
    h = std::move(t.values);
    ++iterations;
  }

  BellmanResult final_step = bellman_apply(h, config);
  RviSolution solution{config, std::move(h), final_step.values(kReference),
                       std::move(final_step.greedy), options.epsilon, span, iterations,
                       kReference};
  return solution;
}

DecoupledSolution solve_decoupled(double phi, double p, double c, int counter_cap,
                                  const DecoupledOptions& options) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw std::invalid_argument("phi must lie in [0,1]");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
  if (!(c >= 0.0)) throw std::invalid_argument("sampling cost must be non-negative");
  if (counter_cap < 1) throw std::invalid_argument("counter cap must be >= 1");

  const Index size = counter_cap + 1;
  const Eigen::ArrayXd n = Eigen::ArrayXd::LinSpaced(size, 0.0, static_cast<double>(counter_cap));
  const Eigen::ArrayXd holding = phi * n;

  // Returns (sample cost, rest cost) per counter for the current h.
  auto action_values = [&](const Eigen::ArrayXd& h) {
    Eigen::ArrayXd next(size);
    next.head(size - 1) = h.tail(size - 1);
    next(size - 1) = h(size - 1);
    Eigen::ArrayXd sample = holding + c + h(0);
    Eigen::ArrayXd rest = holding + p * h(0) + (1.0 - p) * next;
    return std::pair{std::move(sample), std::move(rest)};
  };

  Eigen::ArrayXd h = Eigen::ArrayXd::Zero(size);
  double span = std::numeric_limits<double>::infinity();
  int iterations = 0;
  while (span > options.epsilon) {
    if (iterations >= options.max_iterations) {
      throw NonConvergence("decoupled value iteration did not converge", span);
    }
    auto [sample, rest] = action_values(h);
    Eigen::ArrayXd t = sample.min(rest);
    t -= t(0);
    const Eigen::ArrayXd d = t - h;
    span = d.maxCoeff() - d.minCoeff();
    h = std::move(t);
    ++iterations;
  }

  auto [sample, rest] = action_values(h);
  DecoupledSolution out;
  out.h = h.matrix();
  out.gain = std::min(sample(0), rest(0));
  out.sampling_cost = c;
  out.iterations = iterations;
  out.sample.resize(static_cast<std::size_t>(size));
  for (Index i = 0; i < size; ++i) out.sample[static_cast<std::size_t>(i)] = sample(i) <= rest(i);
  out.threshold = counter_cap;
  out.saturated = true;
  for (int i = 0; i < counter_cap; ++i) {
    if (out.sample[static_cast<std::size_t>(i)]) {
      out.threshold = i;
      out.saturated = false;
      break;
    }
  }
  return out;
}

int threshold_of(double phi, double p, double c, int counter_cap, const DecoupledOptions& options) {
  return solve_decoupled(phi, p, c, counter_cap, options).threshold;
}

double empirical_whittle(std::int64_t n, double phi, double p, int counter_cap,
                         const DecoupledOptions& options) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("empirical_whittle needs p in (0,1)");
  if (n < 0 || n + 1 >= counter_cap) {
    throw std::invalid_argument("counter must satisfy 0 <= n < U-1");
  }
  auto rests_at_n = [&](double c) { return threshold_of(phi, p, c, counter_cap, options) > n; };

  double lo = 0.0;
  double hi = 1.0;
  for (int doubling = 0; !rests_at_n(hi); ++doubling) {
    if (doubling == 64) {
      throw std::runtime_error("no sampling cost makes counter " + std::to_string(n) +
                               " passive below the cap; increase U");
    }
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-6 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (rests_at_n(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace flowsample
