#pragma once

// Pairwise betting e-processes and their grid mixtures, all in natural-log
// space. For indicator data the product ∏(1+λZ_i) collapses to a closed form
// in the two counts, so nothing here needs the stream itself.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "modecert/core.hpp"

namespace modecert {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log of (1+λ)^{n_r} (1−λ)^{n_a}.
double pairwise_log_e(double lambda, std::uint64_t n_r, std::uint64_t n_a);

/// log Σ_λ w_λ (1+λ)^{n_r} (1−λ)^{n_a} over a pairwise grid.
double mixture_log_e(const GridSpec& grid, std::uint64_t n_r, std::uint64_t n_a);

/// Growth-optimal fixed bet (p_r − p₂)/(p_r + p₂) against a competitor of
/// mass p₂.
double oracle_lambda(double p_r, double p2);

/// Max-shifted log Σ exp(x_i). Returns -inf for an empty input or when every
/// term is -inf.
double log_sum_exp(std::span<const double> terms);

/// log Σ_i exp(log_weight_i + value(i)) for i in [0, n), evaluated in two
/// passes so nothing is materialized. Terms equal to -inf are skipped.
template <class ValueFn>
double log_mix(std::span<const double> log_weights, ValueFn&& value) {
  double peak = kNegInf;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double v = log_weights[i] + value(i);
    if (v > peak) peak = v;
  }
  if (peak == kNegInf) return kNegInf;
  if (peak == std::numeric_limits<double>::infinity()) return peak;
  double sum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double v = log_weights[i] + value(i);
    if (v != kNegInf) sum += std::exp(v - peak);
  }
  return peak + std::log(sum);
}

}  // namespace modecert
