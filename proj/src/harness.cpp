#include "flowsample/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace flowsample {

namespace {

constexpr int kBatches = 20;

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

struct ReplicationResult {
  double mean_cost = 0.0;
  std::vector<double> batch_means;
  std::vector<std::uint64_t> actions;
  std::vector<std::uint64_t> resets;
  std::vector<std::vector<std::uint64_t>> histograms;
};

ReplicationResult run_replication(const ScenarioSpec& spec, const SamplingPolicy& policy,
                                  const ExogenousSampler& exo, int replication) {
  const Index M = spec.path.size();
  const Eigen::ArrayXd& phi = spec.path.phi();
  Rng dynamics = derive_stream(spec.seed, static_cast<std::uint64_t>(replication), 0, StreamTag::Dynamics);
  Rng choices = derive_stream(spec.seed, static_cast<std::uint64_t>(replication), 0, StreamTag::Policy);

  ReplicationResult out;
  out.actions.assign(static_cast<std::size_t>(M), 0);
  out.resets.assign(static_cast<std::size_t>(M), 0);
  out.histograms.assign(static_cast<std::size_t>(M), std::vector<std::uint64_t>(kHistogramBins, 0));
  std::vector<char> seen_reset(static_cast<std::size_t>(M), 0);

  const std::int64_t measured_slots = spec.horizon - spec.burn_in;
  const std::int64_t batch_len = std::max<std::int64_t>(1, measured_slots / kBatches);
  double batch_sum = 0.0;
  std::int64_t batch_fill = 0;
  double total = 0.0;

  CounterState state = zero_state(M);
  double cost = 0.0;
  for (std::int64_t t = 0; t < spec.horizon; ++t) {
    const bool measured = t >= spec.burn_in;
    const ActionId action = policy.choose(state, choices);
    if (measured) {
      total += cost;
      batch_sum += cost;
      if (++batch_fill == batch_len) {
        out.batch_means.push_back(batch_sum / static_cast<double>(batch_len));
        batch_sum = 0.0;
        batch_fill = 0;
      }
      ++out.actions[static_cast<std::size_t>(action.index)];
    }
    double next_cost = 0.0;
    for (Index i = 0; i < M; ++i) {
      const bool exogenous = exo.draw(i, dynamics);
      auto& n = state(i);
      if (i == action.index || exogenous) {
        const auto ui = static_cast<std::size_t>(i);
        if (measured) {
          ++out.resets[ui];
          if (seen_reset[ui]) {
            const auto bin = std::min<std::size_t>(static_cast<std::size_t>(n) + 1, kHistogramBins - 1);
            ++out.histograms[ui][bin];
          }
        }
        seen_reset[ui] = 1;
        n = 0;
      } else {
        ++n;
        next_cost += phi(i) * static_cast<double>(n);
      }
    }
    cost = next_cost;
  }
  out.mean_cost = total / static_cast<double>(measured_slots);
  return out;
}

double standard_error(const std::vector<double>& values) {
  const auto k = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= k;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (k - 1.0) / k);
}

/// Runs job(i) for i in [0, count) on up to `threads` workers.
template <class Job>
void parallel_for(int count, int threads, Job&& job) {
  threads = std::clamp(threads, 1, std::max(1, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> workers;
  for (int w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Rng derive_stream(std::uint64_t master, std::uint64_t replication, std::uint64_t flow, StreamTag tag) {
  std::seed_seq seq{lo32(master), hi32(master),           lo32(replication), hi32(replication),
                    lo32(flow),   hi32(flow),             static_cast<std::uint32_t>(tag)};
  return Rng(seq);
}

ScenarioSpec ScenarioSpec::with_default_burn_in(PathConfig path, PolicySpec policy,
                                                std::int64_t horizon, int replications,
                                                std::uint64_t seed) {
  return ScenarioSpec{std::move(path), std::move(policy), horizon, replications, horizon / 10, seed, 1};
}

SimulationReport simulate(const ScenarioSpec& spec) {
  if (spec.burn_in < 0 || spec.horizon <= spec.burn_in) {
    throw std::invalid_argument("need horizon > burn_in >= 0");
  }
  if (spec.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (spec.threads < 1) throw std::invalid_argument("threads must be >= 1");

  const SamplingPolicy policy(spec.policy, spec.path);
  const ExogenousSampler exo(spec.path.p());
  std::vector<ReplicationResult> results(static_cast<std::size_t>(spec.replications));
  parallel_for(spec.replications, spec.threads, [&](int r) {
    results[static_cast<std::size_t>(r)] = run_replication(spec, policy, exo, r);
  });

  const Index M = spec.path.size();
  const double measured = static_cast<double>(spec.horizon - spec.burn_in) * spec.replications;
  SimulationReport report;
  report.seed = spec.seed;
  report.burn_in = spec.burn_in;
  report.slots_simulated = spec.horizon * spec.replications;
  report.per_device_sampling_rate = Eigen::ArrayXd::Zero(M);
  report.per_device_reset_rate = Eigen::ArrayXd::Zero(M);
  report.intersample_histograms.assign(static_cast<std::size_t>(M),
                                       std::vector<std::uint64_t>(kHistogramBins, 0));
  for (const auto& r : results) {
    report.replication_means.push_back(r.mean_cost);
    for (Index i = 0; i < M; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      report.per_device_sampling_rate(i) += static_cast<double>(r.actions[ui]);
      report.per_device_reset_rate(i) += static_cast<double>(r.resets[ui]);
      for (std::size_t z = 0; z < kHistogramBins; ++z) {
        report.intersample_histograms[ui][z] += r.histograms[ui][z];
      }
    }
  }
  report.per_device_sampling_rate /= measured;
  report.per_device_reset_rate /= measured;

  double sum = 0.0;
  for (double m : report.replication_means) sum += m;
  report.mean_cost = sum / static_cast<double>(spec.replications);
  report.cost_stderr = spec.replications >= 2 ? standard_error(report.replication_means)
                                              : standard_error(results.front().batch_means);
  return report;
}

CrosspointResult simulate_crosspoint(const CrosspointSpec& spec) {
  if (spec.flow_count < 1) throw std::invalid_argument("crosspoint needs at least one flow");
  if (spec.horizon < 1) throw std::invalid_argument("horizon must be positive");
  const auto K = static_cast<std::size_t>(spec.flow_count);

  CrosspointResult out;
  if (!spec.lengths.empty() || !spec.positions.empty()) {
    if (spec.lengths.size() != K || spec.positions.size() != K) {
      throw std::invalid_argument("fixed layout needs one length and one position per flow");
    }
    out.lengths = spec.lengths;
    out.positions = spec.positions;
  } else {
    if (spec.min_length < 1 || spec.max_length < spec.min_length) {
      throw std::invalid_argument("invalid path length range");
    }
    Rng layout = derive_stream(spec.seed, 0, 0, StreamTag::Layout);
    for (std::size_t k = 0; k < K; ++k) {
      const int m = std::uniform_int_distribution<int>(spec.min_length, spec.max_length)(layout);
      out.lengths.push_back(m);
      out.positions.push_back(std::uniform_int_distribution<int>(1, m)(layout));
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (out.lengths[k] < 1 || out.positions[k] < 1 || out.positions[k] > out.lengths[k]) {
      throw std::invalid_argument("crosspoint position outside its flow path");
    }
  }

  struct Flow {
    SamplingPolicy policy;
    ExogenousSampler exo;
    CounterState state;
    Index crosspoint;
    Rng dynamics;
    Rng choices;
  };
  std::vector<Flow> flows;
  flows.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Index m = out.lengths[k];
    const Index x = out.positions[k] - 1;
    const PathConfig path(geometric_accuracy_profile(m, spec.sigma),
                          Eigen::ArrayXd::Constant(m, spec.index_p));
    Eigen::ArrayXd background = Eigen::ArrayXd::Constant(m, spec.background_p);
    background(x) = 0.0;
    flows.push_back(Flow{SamplingPolicy(spec.policy, path), ExogenousSampler(background),
                         zero_state(m), x, derive_stream(spec.seed, 0, k, StreamTag::Dynamics),
                         derive_stream(spec.seed, 0, k, StreamTag::Policy)});
  }

  std::int64_t shared = 0;
  bool seen_reset = false;
  std::int64_t t = 0;
  for (; t < spec.horizon; ++t) {
    if (spec.target_samples > 0 &&
        static_cast<std::int64_t>(out.intersample_times.size()) >= spec.target_samples) {
      break;
    }
    bool sampled = false;
    for (auto& f : flows) {
      if (spec.view == CrosspointView::Shared) f.state(f.crosspoint) = shared;
      const ActionId a = f.policy.choose(f.state, f.choices);
      sampled = sampled || a.index == f.crosspoint;
      for (Index i = 0; i < f.state.size(); ++i) {
        const bool exogenous = f.exo.draw(i, f.dynamics);
        f.state(i) = (i == a.index || exogenous) ? 0 : f.state(i) + 1;
      }
    }
    if (sampled) {
      if (seen_reset) out.intersample_times.push_back(shared + 1);
      seen_reset = true;
      shared = 0;
    } else {
      ++shared;
    }
  }
  out.slots_simulated = t;
  return out;
}

}  // namespace flowsample
