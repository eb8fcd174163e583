#pragma once

// W-CITE: certification of the weighted mode argmax_a E[W 1{X=a}] from
// confidence-weighted observations W ∈ [0,1].
//
// The pairwise e-process against competitor a only moves on rounds where
// X ∈ {r, a}, so log Ẽ^{(r,a)}(λ) = A(λ) − B(a,λ) with
//   A(λ)   = Σ_{X_i=r} log(1+λW_i),
//   B(a,λ) = −Σ_{X_i=a} log(1−λW_i).
// Both are kept per λ as (count of unit weights)·log(1±λ) plus a running
// sum over the remaining weights, which makes the all-ones case reduce to
// the unweighted closed form bit for bit.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "modecert/certifier.hpp"

namespace modecert {

class InvalidObservation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WeightedObservation {
  Label label;
  double weight = 1.0;
};

class WCiteCertifier {
 public:
  /// Unique-mode configs only.
  explicit WCiteCertifier(CertifierConfig config);

  /// Throws InvalidObservation when the weight is outside [0,1].
  const StepRecord& step(WeightedObservation obs);

  bool certified() const { return tau_.has_value(); }
  std::optional<std::uint64_t> tau() const { return tau_; }
  Diagnostics diagnostics() const { return diagnostics_; }
  const CountTable& table() const { return table_; }
  const StepRecord& last() const { return last_; }
  Label target() const { return target_; }

  /// μ̂_t(r) = (1/t) Σ W_i 1{X_i = r}.
  double weighted_mean() const;
  /// log M̃_t(q, λ); nullopt when λ ≥ 1/q (point outside Λ_r(q)).
  std::optional<double> weighted_lcb_log(double q, double lambda) const;
  /// log M̃_t(q) over the configured LCB grid.
  double weighted_lcb_mixture_log(double q) const;
  /// L̃_t by bisection over (0, μ̂_t(r)].
  double weighted_lower_conf_bound() const;
  /// log Ẽ_t^{(r,a)} mixture for one competitor.
  double pairwise_log_e(Label competitor) const;

  /// Distinct target-hit weights with multiplicities, in first-seen order.
  const std::vector<std::pair<double, std::uint64_t>>& target_weights() const {
    return target_weights_;
  }

 private:
  struct Tally {
    std::uint64_t unit = 0;        // observations with W == 1
    std::vector<double> fraction;  // per-λ Σ over W != 1 of ±log(1±λW)
  };

  Tally& tally(Label label);
  double log_e_against(const Tally& competitor) const;
  bool all_competitors_pass(double runner_up_value) const;
  double all_competitors_min() const;
  double log_mix_lcb(double q) const;

  CertifierConfig config_;
  Label target_;
  CountTable table_;
  UnseenBoundCache unseen_;
  double threshold_pw_;
  double threshold_r_;

  std::vector<Tally> tallies_;  // indexed by label
  Tally unseen_tally_;
  std::vector<std::pair<double, std::uint64_t>> target_weights_;
  std::unordered_map<double, std::size_t> weight_slot_;
  double target_weight_sum_ = 0.0;

  StepRecord last_;
  Diagnostics diagnostics_;
  std::optional<std::uint64_t> tau_;
};

}  // namespace modecert
