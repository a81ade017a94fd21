#include "flowsample/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flowsample/policies.hpp"

namespace flowsample {

namespace {

double water_level_residual(double v, const Eigen::ArrayXd& slope, const Eigen::ArrayXd& offset) {
  return (v * slope - offset).max(0.0).sum() - 1.0;
}

}  // namespace

WaterFillingResult water_filling(const PathConfig& config) {
  const Eigen::ArrayXd& phi = config.phi();
  const Eigen::ArrayXd& p = config.p();
  const Index M = config.size();

  // Only devices that can receive weight: p < 1 and phi > 0.
  Eigen::ArrayXd slope = Eigen::ArrayXd::Zero(M);
  Eigen::ArrayXd offset = Eigen::ArrayXd::Zero(M);
  std::vector<Index> candidates;
  for (Index i = 0; i < M; ++i) {
    if (p(i) < 1.0 && phi(i) > 0.0) {
      slope(i) = std::sqrt(phi(i) / (1.0 - p(i)));
      offset(i) = p(i) / (1.0 - p(i));
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) {
    throw std::invalid_argument("water-filling infeasible: every device has p = 1 or phi = 0");
  }

  // Device i turns on once v exceeds offset_i / slope_i.
  auto breakpoint = [&](Index i) { return offset(i) / slope(i); };
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Index a, Index b) { return breakpoint(a) < breakpoint(b); });

  double slope_sum = 0.0;
  double offset_sum = 0.0;
  double v = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    slope_sum += slope(candidates[k]);
    offset_sum += offset(candidates[k]);
    v = (1.0 + offset_sum) / slope_sum;
    if (k + 1 == candidates.size() || v <= breakpoint(candidates[k + 1])) break;
  }

  if (std::abs(water_level_residual(v, slope, offset)) > 1e-12) {
    // Bisection fallback; residual is increasing in v.
    double lo = 0.0;
    double hi = std::max(1.0, v);
    while (water_level_residual(hi, slope, offset) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (water_level_residual(mid, slope, offset) < 0.0 ? lo : hi) = mid;
    }
    v = 0.5 * (lo + hi);
  }

  WaterFillingResult out;
  out.v = v;
  out.weights = (v * slope - offset).max(0.0);
  for (Index i = 0; i < M; ++i) {
    if (slope(i) == 0.0) out.weights(i) = 0.0;
    if (out.weights(i) > 0.0) out.active_set.push_back(i);
  }
  return out;
}

double lower_bound(const PathConfig& config) {
  const WaterFillingResult wf = water_filling(config);
  double sum = 0.0;
  for (Index i = 0; i < config.size(); ++i) {
    const double phi = config.phi()(i);
    if (phi == 0.0) continue;
    const double p = config.p()(i);
    sum += phi * (1.0 / ((1.0 - p) * wf.weights(i) + p) - 1.0);
  }
  return 0.5 * sum;
}

double cost_uniform(const PathConfig& config) {
  const double M = static_cast<double>(config.size());
  const Eigen::ArrayXd keep = 1.0 - config.p();
  return (config.phi() * (M - 1.0) * keep / (M - (M - 1.0) * keep)).sum();
}

double cost_order_statistic(const PathConfig& config, int G) {
  const Eigen::ArrayXd q = order_statistic_probabilities(config.size(), G);
  const Eigen::ArrayXd a = (1.0 - q) * (1.0 - config.p());
  return (config.phi() * a / (1.0 - a)).sum();
}

CostValue cost_weighted(const PathConfig& config, const Eigen::ArrayXd& weights) {
  if (weights.size() != config.size()) {
    throw std::invalid_argument("weights length does not match the path");
  }
  check_weights(weights);
  // Per device: stationary mean counter a/(1-a) with a = (1-w)(1-p).
  CostValue out;
  for (Index i = 0; i < config.size(); ++i) {
    const double phi = config.phi()(i);
    if (phi == 0.0) continue;
    const CostValue mean = stationary_mean_counter(weights(i), config.p()(i));
    if (mean.infinite) {
      out.infinite = true;
      continue;
    }
    out.value += phi * mean.value;
  }
  if (out.infinite) out.value = std::numeric_limits<double>::infinity();
  return out;
}

CostValue stationary_mean_counter(double q, double p) {
  if (!(q >= 0.0 && q <= 1.0) || !(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("q and p must lie in [0,1]");
  }
  const double a = (1.0 - q) * (1.0 - p);
  if (a >= 1.0) return {std::numeric_limits<double>::infinity(), true};
  return {a / (1.0 - a), false};
}

double decoupled_gain(std::int64_t threshold_n, double c, double phi, double p) {
  if (threshold_n < 0) throw std::invalid_argument("threshold must be non-negative");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("decoupled_gain needs p in (0,1)");
  const double n = static_cast<double>(threshold_n);
  const double r = 1.0 - p;
  const double rn = std::pow(r, n);
  const double rn1 = rn * r;
  const double denom = 1.0 - rn1;
  return p * rn / denom * c + phi * n - (rn1 - r + n * p) / (p * denom) * phi;
}

GeometricFit geometric_fit_histogram(std::span<const std::uint64_t> counts) {
  if (counts.empty()) throw std::invalid_argument("no inter-sampling times");
  if (counts[0] != 0) throw std::invalid_argument("inter-sampling times must be >= 1");
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) throw std::invalid_argument("no inter-sampling times");
  if (static_cast<std::int64_t>(total) < kMinGeometricFitSamples) {
    throw std::invalid_argument("geometric fit needs at least " +
                                std::to_string(kMinGeometricFitSamples) + " samples, got " +
                                std::to_string(total));
  }
  const double n = static_cast<double>(total);
  GeometricFit fit;
  fit.sample_count = static_cast<std::int64_t>(total);
  fit.p_hat = counts.size() > 1 ? static_cast<double>(counts[1]) / n : 0.0;
  fit.valid = fit.p_hat > 0.0;

  double weighted = 0.0;
  for (std::size_t z = 1; z < counts.size(); ++z) weighted += static_cast<double>(z * counts[z]);
  fit.p_hat_mle = n / weighted;

  const double p = fit.p_hat;
  double abs_diff = 0.0;
  double survival = 1.0;  // Pr(Z > z - 1) under the fitted geometric
  for (std::size_t z = 1; z < counts.size(); ++z) {
    const double model = survival * p;
    abs_diff += std::abs(static_cast<double>(counts[z]) / n - model);
    survival *= 1.0 - p;
  }
  fit.tv_distance = std::min(1.0, 0.5 * (abs_diff + survival));
  return fit;
}

GeometricFit geometric_fit(std::span<const std::int64_t> intersample_times) {
  if (intersample_times.empty()) throw std::invalid_argument("no inter-sampling times");
  const auto max_z = *std::max_element(intersample_times.begin(), intersample_times.end());
  const auto min_z = *std::min_element(intersample_times.begin(), intersample_times.end());
  if (min_z < 1) throw std::invalid_argument("inter-sampling times must be >= 1");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_z) + 1, 0);
  for (const auto z : intersample_times) ++counts[static_cast<std::size_t>(z)];
  return geometric_fit_histogram(counts);
}

}  // namespace flowsample
