#pragma once

// Time-uniform lower confidence bound on a target mass and the simultaneous
// upper bound on the mass of any still-unseen category.

#include <cstdint>
#include <memory>
#include <vector>

#include "modecert/core.hpp"
#include "modecert/eprocess.hpp"

namespace modecert {

inline constexpr double kLcbTolerance = 1e-9;
inline constexpr double kUnseenTolerance = 1e-12;

struct LcbInputs {
  const GridSpec& grid;  // Λ_r with weights v_λ
  std::uint64_t n_r;
  std::uint64_t t;
  double threshold_log;  // log(1/α_r)
};

/// Λ_r(q) membership, λ < 1/q, so every factor 1 + λ(x − q) stays positive.
inline bool in_lcb_support(double lambda, double q) { return lambda * q < 1.0; }

/// log M_t(q) = log Σ_{λ∈Λ_r(q)} v_λ (1+λ(1−q))^{n_r} (1−λq)^{t−n_r}.
/// Returns -inf when Λ_r(q) is empty.
double lcb_mixture_log(double q, const LcbInputs& in);

/// L_t = sup({0} ∪ {q ∈ (0, p̂_t] : M_t(q) ≥ threshold}), located by
/// bisection; the lower end of the final bracket is returned.
double lower_conf_bound(const LcbInputs& in);

/// Same decision as lower_conf_bound(in) > bound, usually with a single
/// mixture evaluation.
bool lcb_exceeds(const LcbInputs& in, double bound);

/// U_t = min{u ∈ (0,1] : u^{-1}(1−u)^t ≤ α_u}, upper end of the bisection
/// bracket.
double unseen_bound(std::uint64_t t, double alpha_u);

/// Memoized U_t for a fixed α_u. A precomputed shared prefix can be attached
/// so many certifiers on one thread pool reuse the same values.
class UnseenBoundTable {
 public:
  UnseenBoundTable(double alpha_u, std::uint64_t horizon);
  double alpha_u() const { return alpha_u_; }
  std::uint64_t horizon() const { return values_.size(); }
  double operator()(std::uint64_t t) const;

 private:
  double alpha_u_;
  std::vector<double> values_;
};

class UnseenBoundCache {
 public:
  explicit UnseenBoundCache(double alpha_u,
                            std::shared_ptr<const UnseenBoundTable> shared = nullptr);
  double operator()(std::uint64_t t);

 private:
  double alpha_u_;
  std::shared_ptr<const UnseenBoundTable> shared_;
  std::vector<double> local_;
};

namespace detail {

// Slack below the threshold within which the one-evaluation screen in
// lcb_exceeds defers to the full bisection.
inline constexpr double kScreenMargin = 1e-9;

template <class MixFn>
double bisect_lcb(double q_max, double threshold_log, MixFn&& log_mix_at) {
  if (!(q_max > 0.0)) return 0.0;
  if (log_mix_at(q_max) >= threshold_log) return q_max;
  double lo = 0.0;
  double hi = q_max;
  while (hi - lo > kLcbTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (log_mix_at(mid) >= threshold_log) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// q ↦ M_t(q) is nonincreasing, so M_t(bound) below the threshold rules out
// every q above the bound.
template <class MixFn>
bool lcb_exceeds(double q_max, double threshold_log, double bound, MixFn&& log_mix_at) {
  if (!(q_max > bound)) return false;
  if (bound > 0.0 && log_mix_at(bound) < threshold_log - kScreenMargin) return false;
  return bisect_lcb(q_max, threshold_log, log_mix_at) > bound;
}

}  // namespace detail

}  // namespace modecert
