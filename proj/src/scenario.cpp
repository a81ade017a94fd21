#include "flowsample/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace flowsample {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "M",      "sigma", "phi",     "p",    "pi0",  "pi1",     "p_max", "policy", "G",
    "p_bar",  "weights", "T",     "reps", "burn_in", "seed", "threads", "U",    "epsilon"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

ScenarioValue parse_value(const std::string& key, std::string_view raw, int line) {
  const auto fail = [&](const std::string& why) {
    return ScenarioError(key, "line " + std::to_string(line) + ": key '" + key + "': " + why);
  };
  raw = trim(raw);
  if (raw.empty()) throw fail("missing value");
  if (raw.front() == '[') {
    if (raw.back() != ']') throw fail("unterminated array");
    std::vector<double> items;
    std::string_view body = trim(raw.substr(1, raw.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const auto item = trim(body.substr(0, comma));
      const auto v = parse_number(item);
      if (!v) throw fail("array element '" + std::string(item) + "' is not a number");
      items.push_back(*v);
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) throw fail("trailing comma in array");
    }
    return items;
  }
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw fail("unterminated string");
    return std::string(raw.substr(1, raw.size() - 2));
  }
  if (const auto v = parse_number(raw)) return *v;
  for (const char c : raw) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) {
      throw fail("cannot parse value '" + std::string(raw) + "'");
    }
  }
  return std::string(raw);
}

std::int64_t as_integer(const std::string& key, double v) {
  if (std::floor(v) != v || std::abs(v) > 9.0e15) {
    throw ScenarioError(key, "key '" + key + "': expected an integer, got " + std::to_string(v));
  }
  return static_cast<std::int64_t>(v);
}

Eigen::ArrayXd to_array(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Index>(v.size()));
}

/// Exogenous probabilities for a path of M devices.
Eigen::ArrayXd scenario_p(const ScenarioFile& file, Index M) {
  const int sources = int(file.has("p")) + int(file.has("pi0") || file.has("pi1")) + int(file.has("p_max"));
  if (sources > 1) throw ScenarioError("p", "key 'p': give only one of p, pi0/pi1, p_max");
  if (file.has("pi0") || file.has("pi1")) {
    const double pi0 = file.number("pi0");
    const double pi1 = file.number("pi1");
    if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw ScenarioError("pi0", "key 'pi0': must lie in [0,1]");
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw ScenarioError("pi1", "key 'pi1': must lie in [0,1]");
    Eigen::ArrayXd p(M);
    for (Index i = 0; i < M; ++i) p(i) = (i % 2 == 0) ? pi0 : pi1;  // device i+1 odd -> pi0
    return p;
  }
  if (file.has("p_max")) {
    const double p_max = file.number("p_max");
    if (!(p_max > 0.0 && p_max <= 1.0)) throw ScenarioError("p_max", "key 'p_max': must lie in (0,1]");
    Rng rng = derive_stream(static_cast<std::uint64_t>(file.integer_or("seed", 1)), 0, 0, StreamTag::Layout);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd p(M);
    for (Index i = 0; i < M; ++i) p(i) = p_max * (1.0 - u(rng));
    return p;
  }
  const std::vector<double> p = file.has("p") ? file.numbers("p") : std::vector<double>{0.0};
  for (const double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ScenarioError("p", "key 'p': values must lie in [0,1]");
  }
  if (p.size() == 1) return Eigen::ArrayXd::Constant(M, p.front());
  if (static_cast<Index>(p.size()) != M) {
    throw ScenarioError("p", "key 'p': expected 1 or " + std::to_string(M) + " values, got " +
                                 std::to_string(p.size()));
  }
  return to_array(p);
}

PathConfig build_path(const ScenarioFile& file, std::optional<Index> M_override) {
  const int U = static_cast<int>(file.integer_or("U", 10));
  if (U < 1) throw ScenarioError("U", "key 'U': must be >= 1");
  try {
    if (file.has("phi")) {
      const Eigen::ArrayXd phi = to_array(file.numbers("phi"));
      if (!((phi >= 0.0).all() && (phi <= 1.0).all()) || !(phi > 0.0).any()) {
        throw ScenarioError("phi", "key 'phi': values must lie in [0,1], at least one positive");
      }
      return PathConfig(phi, scenario_p(file, phi.size()), U);
    }
    if (!file.has("M")) throw ScenarioError("M", "key 'M': required when phi is not given");
    const Index M = M_override ? *M_override : file.integer("M");
    if (M < 1) throw ScenarioError("M", "key 'M': must be >= 1");
    const double sigma = file.number_or("sigma", 1.0);
    if (!(sigma > 0.0 && sigma <= 1.0)) throw ScenarioError("sigma", "key 'sigma': must lie in (0,1]");
    return PathConfig(geometric_accuracy_profile(M, sigma), scenario_p(file, M), U);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("path", std::string("invalid path: ") + e.what());
  }
}

}  // namespace

ScenarioFile ScenarioFile::parse(std::string_view text) {
  ScenarioFile file;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    // Comments: a '#' outside a quoted string.
    bool quoted = false;
    for (std::size_t i = 0; i < view.size(); ++i) {
      if (view[i] == '"') quoted = !quoted;
      if (view[i] == '#' && !quoted) {
        view = view.substr(0, i);
        break;
      }
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ScenarioError(std::string(view), "line " + std::to_string(number) +
                                                 ": expected 'key = value', got '" +
                                                 std::string(view) + "'");
    }
    const std::string key(trim(view.substr(0, eq)));
    if (!kKnownKeys.contains(key)) {
      throw ScenarioError(key, "line " + std::to_string(number) + ": unknown key '" + key + "'");
    }
    if (file.values_.contains(key)) {
      throw ScenarioError(key, "line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
    file.values_[key] = parse_value(key, view.substr(eq + 1), number);
  }
  return file;
}

ScenarioFile ScenarioFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

double ScenarioFile::number(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ScenarioError(key, "missing key '" + key + "'");
  if (const auto* v = std::get_if<double>(&it->second)) return *v;
  throw ScenarioError(key, "key '" + key + "': expected a number");
}

double ScenarioFile::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::int64_t ScenarioFile::integer(const std::string& key) const { return as_integer(key, number(key)); }

std::int64_t ScenarioFile::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string ScenarioFile::string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ScenarioError(key, "missing key '" + key + "'");
  if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
  throw ScenarioError(key, "key '" + key + "': expected a string");
}

std::vector<double> ScenarioFile::numbers(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ScenarioError(key, "missing key '" + key + "'");
  if (const auto* v = std::get_if<double>(&it->second)) return {*v};
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  throw ScenarioError(key, "key '" + key + "': expected a number or a list of numbers");
}

PathConfig scenario_path(const ScenarioFile& file) {
  if (!file.has("phi") && file.has("M") && file.numbers("M").size() != 1) {
    throw ScenarioError("M", "key 'M': expected a single value for this command");
  }
  return build_path(file, std::nullopt);
}

std::vector<PathConfig> scenario_paths(const ScenarioFile& file) {
  if (file.has("phi") || !file.has("M")) return {build_path(file, std::nullopt)};
  std::vector<PathConfig> paths;
  for (const double m : file.numbers("M")) paths.push_back(build_path(file, as_integer("M", m)));
  return paths;
}

RviOptions scenario_solver_options(const ScenarioFile& file) {
  RviOptions options;
  options.epsilon = file.number_or("epsilon", options.epsilon);
  return options;
}

PolicySpec scenario_policy(const ScenarioFile& file, const PathConfig& path) {
  const std::string name = file.has("policy") ? file.string("policy") : "uniform";
  if (name == "uniform") return UniformPolicy{};
  if (name == "order-statistic") {
    const auto G = file.integer_or("G", 2);
    if (G < 1) throw ScenarioError("G", "key 'G': must be >= 1");
    return OrderStatisticPolicy{static_cast<int>(G)};
  }
  if (name == "weighted") {
    WeightedPolicy policy;
    if (file.has("weights")) policy.weights = to_array(file.numbers("weights"));
    return policy;
  }
  if (name == "whittle") return WhittlePolicy{};
  if (name == "second-order") return SecondOrderPolicy{};
  if (name == "first-order") return FirstOrderPolicy{};
  if (name == "heuristic") return HeuristicPolicy{file.number_or("p_bar", kDefaultHeuristicThreshold)};
  if (name == "optimal") {
    return TablePolicy{std::make_shared<const RviSolution>(
        relative_value_iteration(path, scenario_solver_options(file)))};
  }
  throw ScenarioError("policy", "key 'policy': unknown policy '" + name + "'");
}

ScenarioSpec scenario_simulation(const ScenarioFile& file) {
  PathConfig path = scenario_path(file);
  PolicySpec policy = scenario_policy(file, path);
  const std::int64_t horizon = file.integer_or("T", 1'000'000);
  ScenarioSpec spec{std::move(path),
                    std::move(policy),
                    horizon,
                    static_cast<int>(file.integer_or("reps", 1)),
                    file.integer_or("burn_in", horizon / 10),
                    static_cast<std::uint64_t>(file.integer_or("seed", 1)),
                    static_cast<int>(file.integer_or("threads", 1))};
  if (spec.horizon <= spec.burn_in || spec.burn_in < 0) {
    throw ScenarioError("burn_in", "key 'burn_in': need T > burn_in >= 0");
  }
  if (spec.replications < 1) throw ScenarioError("reps", "key 'reps': must be >= 1");
  return spec;
}

}  // namespace flowsample
