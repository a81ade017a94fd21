#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace flowsample {

/// Desk-scale settings shared by every figure grid.
struct ReproduceOptions {
  std::int64_t horizon = 200'000;  ///< slots per replication (burn-in is 10%)
  int replications = 20;
  int parameter_draws = 20;        ///< random p draws per point for R1/R2
  std::int64_t crosspoint_samples = 100'000;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// One CSV row. Missing numbers are NaN and print as empty fields.
/// `p` is the homogeneous p, pi_1 (S3) or p_max (R1/R2); M is the mean flow
/// length for figure G.
struct ReproduceRow {
  std::string figure;
  double M = 0.0;
  double sigma = 0.0;
  double p = 0.0;
  std::string policy;
  std::string metric;
  double analytic = 0.0;
  double simulated = 0.0;
  double stderr_ = 0.0;
};

/// Figure ids: S1, S2, S3, R1, R2, R3, R4, G. Throws std::invalid_argument
/// for anything else.
std::vector<ReproduceRow> reproduce(const std::string& figure, const ReproduceOptions& options);

const std::vector<std::string>& figure_ids();

/// `%.10g`, or an empty string for NaN.
std::string format_number(double value);

void write_reproduce_csv(std::ostream& out, const std::vector<ReproduceRow>& rows);

}  // namespace flowsample
