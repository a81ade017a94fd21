#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>

namespace flowsample {

/// Below this exogenous probability the Whittle index is replaced by its
/// p -> 0 limit (the second-order index).
inline constexpr double kWhittleTinyP = 1e-9;

namespace detail {

template <std::floating_point Scalar>
void check_index_args(std::int64_t n, Scalar phi, Scalar p) {
  if (n < 0) throw std::invalid_argument("counter must be non-negative");
  if (!(phi >= Scalar(0) && phi <= Scalar(1))) throw std::invalid_argument("phi must lie in [0,1]");
  if (!(p >= Scalar(0) && p <= Scalar(1))) throw std::invalid_argument("p must lie in [0,1]");
}

/// ((1-p)^m + m p - 1) / p^2 without cancellation.
///
/// For m p < 0.1 the binomial expansion sum_{k>=2} C(m,k) (-p)^(k-2) is
/// summed directly; its terms shrink by a factor < m p each step. Otherwise
/// the closed form is used with (1-p)^m = exp(m log1p(-p)).
template <std::floating_point Scalar>
Scalar whittle_bracket_over_p2(std::int64_t m, Scalar p) {
  const Scalar mf = static_cast<Scalar>(m);
  if (mf * p < Scalar(0.1)) {
    Scalar term = mf * (mf - 1) / 2;
    Scalar sum = term;
    for (std::int64_t k = 2; k < m; ++k) {
      term *= -p * static_cast<Scalar>(m - k) / static_cast<Scalar>(k + 1);
      sum += term;
      if (std::abs(term) <= std::abs(sum) * Scalar(1e-18)) break;
    }
    return sum;
  }
  const Scalar pow_term = p < Scalar(1e-3) ? std::exp(mf * std::log1p(-p)) : std::pow(1 - p, mf);
  return (pow_term + mf * p - 1) / (p * p);
}

}  // namespace detail

/// Second-order index phi (n+1)(n+2)/2.
template <std::floating_point Scalar>
Scalar second_order_index(std::int64_t n, Scalar phi) {
  detail::check_index_args(n, phi, Scalar(0));
  const Scalar nf = static_cast<Scalar>(n);
  return phi * (nf + 1) * (nf + 2) / 2;
}

/// First-order index phi (n+1).
template <std::floating_point Scalar>
Scalar first_order_index(std::int64_t n, Scalar phi) {
  detail::check_index_args(n, phi, Scalar(0));
  return phi * (static_cast<Scalar>(n) + 1);
}

/// Whittle index c*(n) = phi (1-p) / p^2 [(1-p)^(n+2) + (n+2) p - 1].
template <std::floating_point Scalar>
Scalar whittle_index(std::int64_t n, Scalar phi, Scalar p) {
  detail::check_index_args(n, phi, p);
  if (p <= Scalar(kWhittleTinyP)) return second_order_index(n, phi);
  if (p == Scalar(1)) return Scalar(0);
  return phi * (1 - p) * detail::whittle_bracket_over_p2(n + 2, p);
}

}  // namespace flowsample
