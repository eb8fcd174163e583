#include "modecert/eprocess.hpp"

#include <algorithm>

namespace modecert {

double pairwise_log_e(double lambda, std::uint64_t n_r, std::uint64_t n_a) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidParameter("lambda must lie in (0,1)");
  return static_cast<double>(n_r) * std::log1p(lambda) +
         static_cast<double>(n_a) * std::log1p(-lambda);
}

double mixture_log_e(const GridSpec& grid, std::uint64_t n_r, std::uint64_t n_a) {
  if (grid.kind() != GridKind::pairwise) throw InvalidParameter("mixture_log_e needs a pairwise grid");
  const auto up = grid.log_up();
  const auto down = grid.log_down();
  const double nr = static_cast<double>(n_r);
  const double na = static_cast<double>(n_a);
  return log_mix(grid.log_weights(), [&](std::size_t i) { return nr * up[i] + na * down[i]; });
}

double oracle_lambda(double p_r, double p2) {
  if (!(p2 > 0.0 && p2 <= p_r && p_r + p2 <= 1.0 + kSumTolerance)) {
    throw InvalidParameter("oracle_lambda needs 0 < p2 <= p_r and p_r + p2 <= 1");
  }
  return (p_r - p2) / (p_r + p2);
}

double log_sum_exp(std::span<const double> terms) {
  if (terms.empty()) return kNegInf;
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (peak == kNegInf || !std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double x : terms) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

}  // namespace modecert
