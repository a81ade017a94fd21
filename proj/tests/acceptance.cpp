// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria (capped at 255).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "flowsample/analysis.hpp"
#include "flowsample/harness.hpp"
#include "flowsample/indices.hpp"
#include "flowsample/model.hpp"
#include "flowsample/policies.hpp"
#include "flowsample/reproduce.hpp"
#include "flowsample/solver.hpp"

namespace {

using namespace flowsample;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, pattern, a, b, c);
  return buffer;
}

ReproduceOptions desk_options() {
  ReproduceOptions options;
  options.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return options;
}

/// Rows of one figure keyed by (M, p, policy).
class Table {
 public:
  explicit Table(std::vector<ReproduceRow> rows) : rows_(std::move(rows)) {}

  const ReproduceRow& get(double M, double p, const std::string& policy,
                          const std::string& metric = "mean_cost") const {
    for (const auto& r : rows_) {
      if (r.M == M && std::abs(r.p - p) < 1e-12 && r.policy == policy && r.metric == metric) return r;
    }
    throw std::runtime_error("missing row " + policy + " " + metric);
  }
  const std::vector<ReproduceRow>& rows() const { return rows_; }

 private:
  std::vector<ReproduceRow> rows_;
};

std::map<std::string, Table> g_figures;

const Table& figure(const std::string& id) {
  auto it = g_figures.find(id);
  if (it == g_figures.end()) it = g_figures.emplace(id, Table(reproduce(id, desk_options()))).first;
  return it->second;
}

double relative(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

PathConfig random_config(Rng& rng) {
  std::uniform_int_distribution<Index> m(1, 50);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const Index M = m(rng);
  Eigen::ArrayXd phi(M), p(M);
  for (Index i = 0; i < M; ++i) {
    phi(i) = u(rng);
    p(i) = u(rng);
  }
  return PathConfig(phi, p);
}

Outcome criterion1() {
  Outcome out;
  double worst = 0.0;
  for (const double p : {0.025, 0.05, 0.1, 0.15, 0.2}) {
    const double gain = figure("S1").get(3, p, "optimal").analytic;
    const double whittle = figure("S1").get(3, p, "whittle").simulated;
    worst = std::max(worst, relative(whittle, gain));
  }
  out.pass = worst <= 0.02;
  out.detail = fmt("max |whittle - gain| / gain = %.4f (limit 0.02)", worst);
  return out;
}

Outcome criterion2() {
  Outcome out;
  double worst = 0.0;
  for (const double M : {5, 10, 20, 50, 100, 200}) {
    for (const std::string policy : {"uniform", "order-statistic-G2", "order-statistic-G3", "weighted"}) {
      const ReproduceRow& r = figure("S2").get(M, 0.1, policy);
      const double allowed = std::max(0.01 * r.analytic, 3 * r.stderr_);
      worst = std::max(worst, std::abs(r.simulated - r.analytic) / allowed);
    }
  }
  out.pass = worst <= 1.0;
  out.detail = fmt("max |sim - closed form| / max(1%%, 3se) = %.3f (limit 1)", worst);
  return out;
}

Outcome criterion3() {
  const Table& s2 = figure("S2");
  const double uniform = s2.get(200, 0.1, "uniform").simulated;
  const double order = s2.get(200, 0.1, "order-statistic-G2").simulated;
  const double weighted = s2.get(200, 0.1, "weighted").simulated;
  Outcome out;
  const double du = relative(uniform, 45.0), dg = relative(order, 45.0), dw = relative(weighted, 22.64);
  out.pass = du <= 0.05 && dg <= 0.05 && dw <= 0.03;
  out.detail = fmt("uniform off 45 by %.4f, G2 off 45 by %.4f", du, dg) +
               fmt(", weighted %.3f off 22.64 by %.4f (limits 0.05, 0.05, 0.03)", weighted, dw);
  return out;
}

Outcome criterion4() {
  const Table& s2 = figure("S2");
  const double whittle = s2.get(200, 0.1, "whittle").simulated;
  const double vs_uniform = 100 * (1 - whittle / s2.get(200, 0.1, "uniform").simulated);
  const double vs_weighted = 100 * (1 - whittle / s2.get(200, 0.1, "weighted").simulated);
  Outcome out;
  out.pass = std::abs(vs_uniform - 66.4) <= 2 && std::abs(vs_weighted - 33.4) <= 2;
  out.detail = fmt("reduction vs uniform %.2f%% (66.4 +- 2), vs weighted %.2f%% (33.4 +- 2)", vs_uniform, vs_weighted);
  return out;
}

Outcome criterion5() {
  Outcome out;
  Rng rng(5005);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PathConfig cfg = random_config(rng);
    const CostValue weighted = cost_weighted(cfg, water_filling(cfg).weights);
    const double bound = lower_bound(cfg);
    worst = std::max(worst, std::abs(weighted.value - 2 * bound) / std::max(weighted.value, 1e-300));
  }
  int below = 0, checked = 0;
  for (const std::string id : {"S1", "S2"}) {
    const Table& t = figure(id);
    for (const auto& r : t.rows()) {
      if (r.metric != "mean_cost" || std::isnan(r.simulated)) continue;
      const double bound = t.get(r.M, r.p, "lower-bound").analytic;
      ++checked;
      if (r.simulated < bound - 3 * r.stderr_) ++below;
    }
  }
  out.pass = worst <= 1e-10 && below == 0 && checked > 0;
  out.detail = fmt("max rel |weighted - 2 LB| = %.2e; %g of %g simulated costs below LB - 3se", worst, below, checked);
  return out;
}

Outcome criterion6() {
  Outcome out;
  Rng rng(6006);
  std::uniform_real_distribution<double> phi_dist(0.05, 1.0), p_dist(0.05, 0.95);
  std::uniform_int_distribution<std::int64_t> n_dist(0, 8);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double phi = phi_dist(rng), p = p_dist(rng);
    const std::int64_t n = n_dist(rng);
    const double oracle = empirical_whittle(n, phi, p, 60);
    const double closed = whittle_index(n, phi, p);
    worst = std::max(worst, std::abs(oracle - closed) / std::max(1e-3, 1e-3 * std::abs(closed)));
  }
  out.pass = worst <= 1.0;
  out.detail = fmt("max error / max(1e-3, 1e-3 rel) = %.3f (limit 1)", worst);
  return out;
}

Outcome criterion7() {
  Rng rng(7007);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const int U = 30;
  int monotone = 0, increasing = 0, sandwich = 0, solutions = 0;
  for (int k = 0; k < 20; ++k) {
    const double phi = u(rng), p = u(rng);
    const double c_max = whittle_index(U - 2, phi, p);
    int previous = -1;
    for (int j = 0; j < 50; ++j) {
      const double c = c_max * j / 49.0;
      const DecoupledSolution sol = solve_decoupled(phi, p, c, U);
      ++solutions;
      if (sol.threshold < previous) ++monotone;
      previous = sol.threshold;
      for (int n = 0; n < U; ++n) {
        if (!(sol.h(n) < sol.h(n + 1))) {
          ++increasing;
          break;
        }
      }
      if (!sol.saturated && sol.threshold + 1 <= U) {
        const double bar = c / (1 - p);
        if (sol.h(sol.threshold) > bar + 1e-6 || sol.h(sol.threshold + 1) < bar - 1e-6) ++sandwich;
      }
    }
  }
  Outcome out;
  out.pass = monotone == 0 && increasing == 0 && sandwich == 0;
  out.detail = fmt("%g solutions; threshold decreases: %g, non-increasing h: %g", solutions, monotone, increasing) +
               fmt(", sandwich violations: %g", sandwich);
  return out;
}

Outcome criterion8() {
  const Table& s3 = figure("S3");
  double worst = 0.0;
  int heuristic_bad = 0;
  for (int k = 1; k <= 12; ++k) {
    const double pi1 = 0.05 * k;
    const ReproduceRow& second = s3.get(40, pi1, "second-order");
    const ReproduceRow& whittle = s3.get(40, pi1, "whittle");
    const ReproduceRow& heuristic = s3.get(40, pi1, "heuristic");
    worst = std::max(worst, relative(second.simulated, whittle.simulated));
    if (pi1 < 0.3 - 1e-12) {
      if (relative(heuristic.simulated, second.simulated) > 1e-12) ++heuristic_bad;
    } else if (heuristic.simulated > second.simulated + second.stderr_) {
      ++heuristic_bad;
    }
  }
  Outcome out;
  out.pass = worst <= 0.05 && heuristic_bad == 0;
  out.detail = fmt("max |second-order - whittle| / whittle = %.4f (limit 0.05); heuristic violations: %g", worst,
                   heuristic_bad);
  return out;
}

Outcome criterion9() {
  const Table& g = figure("G");
  double worst = 0.0, fewest = 1e300;
  for (const auto& r : g.rows()) {
    if (r.metric == "tv_distance") worst = std::max(worst, r.simulated);
    if (r.metric == "samples") fewest = std::min(fewest, r.simulated);
  }
  Outcome out;
  out.pass = worst < 0.02 && fewest >= 1e5;
  out.detail = fmt("max tv_distance %.4f (limit 0.02), min samples %.0f", worst, fewest);
  return out;
}

Outcome criterion10() {
  double worst_opt = 0.0, worst_second = 0.0;
  for (const std::string id : {"R1", "R2"}) {
    for (const auto& r : figure(id).rows()) {
      if (r.policy != "whittle") continue;
      const double gain = figure(id).get(r.M, r.p, "optimal").analytic;
      worst_opt = std::max(worst_opt, relative(r.simulated, gain));
    }
  }
  for (const std::string id : {"R3", "R4"}) {
    const Table& t = figure(id);
    for (const auto& r : t.rows()) {
      if (r.policy != "second-order") continue;
      for (const auto& w : t.rows()) {
        if (w.policy == "whittle" && w.sigma == r.sigma && w.p == r.p) {
          worst_second = std::max(worst_second, relative(r.simulated, w.simulated));
        }
      }
    }
  }
  Outcome out;
  out.pass = worst_opt <= 0.02 && worst_second <= 0.05;
  out.detail = fmt("whittle vs optimal %.4f (limit 0.02), second-order vs whittle %.4f (limit 0.05)", worst_opt,
                   worst_second);
  return out;
}

/// Every successor of `state` under `action`: the sampled device resets,
/// each other device either resets or increments.
std::vector<CounterState> successors(const CounterState& state, Index action) {
  const Index M = state.size();
  std::vector<CounterState> out;
  for (long mask = 0; mask < (1L << M); ++mask) {
    if (mask & (1L << action)) continue;
    CounterState next(M);
    for (Index i = 0; i < M; ++i) next(i) = (i == action || (mask & (1L << i))) ? 0 : state(i) + 1;
    out.push_back(next);
  }
  return out;
}

Outcome criterion11() {
  Rng rng(1111);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> counter(0, 15);
  int failures = 0;
  double worst_row = 0.0, worst_tv = 0.0;

  for (Index M = 1; M <= 4; ++M) {
    for (int k = 0; k < 20; ++k) {
      Eigen::ArrayXd phi(M), p(M);
      CounterState s(M);
      for (Index i = 0; i < M; ++i) {
        phi(i) = 0.05 + 0.95 * u(rng);
        p(i) = u(rng);
        s(i) = counter(rng);
      }
      const PathConfig cfg(phi, p);
      for (Index a = 0; a < M; ++a) {
        double total = 0.0;
        for (const CounterState& next : successors(s, a)) total += transition_probability(s, next, ActionId{a}, cfg);
        worst_row = std::max(worst_row, std::abs(total - 1.0));
      }
    }
  }
  if (worst_row > 1e-12) ++failures;

  {
    Eigen::ArrayXd p(4);
    p << 0.1, 0.35, 0.6, 0.02;
    const PathConfig cfg(geometric_accuracy_profile(4, 0.8), p);
    CounterState s(4);
    s << 2, 0, 5, 1;
    const int draws = 200'000;
    for (Index a = 0; a < 4; ++a) {
      std::map<std::vector<std::int64_t>, int> counts;
      for (int d = 0; d < draws; ++d) {
        const CounterState next = step(s, ActionId{a}, cfg, rng);
        ++counts[std::vector<std::int64_t>(next.data(), next.data() + next.size())];
      }
      double tv = 0.0;
      for (const CounterState& next : successors(s, a)) {
        const auto it = counts.find(std::vector<std::int64_t>(next.data(), next.data() + next.size()));
        const double empirical = it == counts.end() ? 0.0 : static_cast<double>(it->second) / draws;
        tv += std::abs(empirical - transition_probability(s, next, ActionId{a}, cfg));
      }
      worst_tv = std::max(worst_tv, tv / 2);
    }
  }
  if (worst_tv >= 0.01) ++failures;

  int monotone_bad = 0;
  for (int k = 0; k < 200; ++k) {
    const double phi = 0.01 + 0.99 * u(rng), p = u(rng) * 0.999;
    for (std::int64_t n = 0; n < 300; ++n) {
      if (!(whittle_index(n + 1, phi, p) > whittle_index(n, phi, p))) ++monotone_bad;
      if (!(second_order_index(n + 1, phi) > second_order_index(n, phi))) ++monotone_bad;
      if (!(first_order_index(n + 1, phi) > first_order_index(n, phi))) ++monotone_bad;
    }
  }
  if (monotone_bad > 0) ++failures;

  int scaling_bad = 0;
  for (int k = 0; k < 500; ++k) {
    const Index M = 2 + k % 10;
    Eigen::ArrayXd phi(M), p(M);
    CounterState s(M);
    for (Index i = 0; i < M; ++i) {
      phi(i) = 0.01 + 0.99 * u(rng);
      p(i) = 0.01 + 0.98 * u(rng);
      s(i) = counter(rng);
    }
    const double scale = 0.1 + 0.9 * u(rng);
    const PathConfig base(phi, p), scaled(phi * scale, p);
    for (const auto kind : {IndexKind::Whittle, IndexKind::SecondOrder, IndexKind::FirstOrder, IndexKind::Heuristic}) {
      if (choose_by_index(s, base, {kind}) != choose_by_index(s, scaled, {kind})) ++scaling_bad;
    }
  }
  if (scaling_bad > 0) ++failures;

  ScenarioSpec spec = ScenarioSpec::with_default_burn_in(PathConfig::homogeneous(6, 0.8, 0.15), WhittlePolicy{},
                                                         50'000, 4, 77);
  const SimulationReport first = simulate(spec);
  spec.threads = 3;
  const SimulationReport second = simulate(spec);
  const bool deterministic = first.replication_means == second.replication_means &&
                             first.mean_cost == second.mean_cost && first.cost_stderr == second.cost_stderr &&
                             first.intersample_histograms == second.intersample_histograms;
  if (!deterministic) ++failures;

  Outcome out;
  out.pass = failures == 0;
  out.detail = fmt("row sum err %.1e, step TV %.4f, monotonicity violations %g", worst_row, worst_tv, monotone_bad) +
               fmt(", scaling violations %g, deterministic ", scaling_bad) + (deterministic ? "yes" : "no");
  return out;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10, criterion11};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[k]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failed;
    std::printf("criterion %2zu: %s  %s [%.0fs]\n", k + 1, outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  return std::min(failed, 255);
}
