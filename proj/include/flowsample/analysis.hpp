#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "flowsample/model.hpp"

namespace flowsample {

/// Closed-form average cost. `infinite` is set when some device with
/// phi > 0 can never be sampled (zero weight and p = 0); `value` is then +inf.
struct CostValue {
  double value = 0.0;
  bool infinite = false;
};

struct WaterFillingResult {
  Eigen::ArrayXd weights;       ///< optimal sampling distribution alpha*_i = w*_i
  double v = 0.0;               ///< water level
  std::vector<Index> active_set;  ///< 0-based devices with positive weight
};

/// Solves sum_i (v sqrt(phi_i/(1-p_i)) - p_i/(1-p_i))^+ = 1 exactly on the
/// piecewise-linear structure. Devices with p_i = 1 or phi_i = 0 get weight 0.
WaterFillingResult water_filling(const PathConfig& config);

/// 1/2 sum_i phi_i (1/((1-p_i) alpha*_i + p_i) - 1).
double lower_bound(const PathConfig& config);

double cost_uniform(const PathConfig& config);
double cost_order_statistic(const PathConfig& config, int G);
CostValue cost_weighted(const PathConfig& config, const Eigen::ArrayXd& weights);

/// Mean counter a/(1-a), a = (1-q)(1-p), of a device sampled by this flow
/// with probability q per slot.
CostValue stationary_mean_counter(double q, double p);

/// Gain of the single-device threshold policy that samples at counter
/// `threshold_n` and rests below it, with sampling cost c.
double decoupled_gain(std::int64_t threshold_n, double c, double phi, double p);

struct GeometricFit {
  double p_hat = 0.0;      ///< empirical Pr(Z = 1)
  double p_hat_mle = 0.0;  ///< 1 / mean(Z), recorded for diagnostics
  double tv_distance = 0.0;
  std::int64_t sample_count = 0;
  bool valid = true;       ///< false when p_hat is 0 (no unit gaps observed)
};

inline constexpr std::int64_t kMinGeometricFitSamples = 1000;

/// Total variation distance between the empirical inter-sampling-time PMF
/// and Geometric(p_hat) on {1, 2, ...}. Needs at least 1000 samples.
GeometricFit geometric_fit(std::span<const std::int64_t> intersample_times);

/// Same, from a histogram where counts[z] is the number of samples equal to z
/// (counts[0] must be zero).
GeometricFit geometric_fit_histogram(std::span<const std::uint64_t> counts);

}  // namespace flowsample
