#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowsample/harness.hpp"
#include "flowsample/model.hpp"
#include "flowsample/policies.hpp"
#include "flowsample/solver.hpp"

namespace flowsample {

/// Scenario files are flat `key = value` lines. Values are numbers, strings
/// (bare words or double-quoted) or arrays of numbers `[a, b, c]`. `#`
/// starts a comment. Keys:
///
///   M, sigma          homogeneous geometric accuracy profile (M may be a list for `analyze`)
///   phi               explicit accuracies (overrides M/sigma)
///   p                 common exogenous probability, or one per device
///   pi0, pi1          alternating profile: odd devices pi0, even devices pi1
///   p_max             random profile: p_i ~ Uniform(0, p_max], drawn from `seed`
///   policy            uniform | order-statistic | weighted | whittle | second-order |
///                     first-order | heuristic | optimal
///   G                 order-statistic parameter (a list for `analyze`)
///   p_bar             heuristic threshold (default 0.3)
///   weights           explicit weights for `weighted` (default: water-filling)
///   T, reps, burn_in  horizon, replications, burn-in slots (default 10% of T)
///   seed, threads     master seed, worker threads
///   U, epsilon        solver counter cap and stopping span
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

using ScenarioValue = std::variant<double, std::string, std::vector<double>>;

class ScenarioFile {
 public:
  static ScenarioFile parse(std::string_view text);
  static ScenarioFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, ScenarioValue value) { values_[key] = std::move(value); }

  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
  std::string string(const std::string& key) const;
  /// A scalar is returned as a one-element list.
  std::vector<double> numbers(const std::string& key) const;

 private:
  std::map<std::string, ScenarioValue> values_;
};

/// Path for a single M. Throws ScenarioError if `M` lists several values.
PathConfig scenario_path(const ScenarioFile& file);
/// One path per listed M value (a single path when phi is explicit).
std::vector<PathConfig> scenario_paths(const ScenarioFile& file);

RviOptions scenario_solver_options(const ScenarioFile& file);

/// Resolves the policy on `path`; `optimal` runs relative value iteration.
PolicySpec scenario_policy(const ScenarioFile& file, const PathConfig& path);

ScenarioSpec scenario_simulation(const ScenarioFile& file);

}  // namespace flowsample
