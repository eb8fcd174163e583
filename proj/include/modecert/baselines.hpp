#pragma once

// Comparison baselines: a fixed-sample Bonferroni certifier and a
// leader-tracking sequential test indexed by the (leader, runner-up) tuple.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "modecert/core.hpp"

namespace modecert {

/// One-sided exact sign test: P(Bin(n_r + n_a, 1/2) ≥ n_r).
double sign_test_pvalue(std::uint64_t n_r, std::uint64_t n_a);

/// One-sided Clopper–Pearson lower bound on a binomial proportion at level
/// alpha. Zero when there are no successes.
double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double alpha);

struct BonferroniVerdict {
  bool certified = false;
  bool target_seen = false;
  /// Largest sign-test p-value over observed competitors; absent when the
  /// target is the only observed label.
  std::optional<double> worst_pvalue;
  double pairwise_level = 0.0;
  double cp_lower = 0.0;
  double unseen = 1.0;
};

/// Fixed-N certification: every observed competitor must be rejected by a
/// sign test at (ε/2)/|competitors|, and the Clopper–Pearson lower bound on
/// p_r at ε/4 must exceed the unseen bound at ε/4.
BonferroniVerdict bonferroni_verdict(const CountTable& counts, Label target, double epsilon);
bool bonferroni_certify(std::span<const Label> sample, Label target, double epsilon);

struct MmcTuple {
  Label leader;
  Label runner_up;
  std::uint32_t order = 0;  // 1-based instantiation order j
  double alpha = 0.0;       // ε·2^{-j}
  double log_pairwise = 0.0;
  double log_residual = 0.0;
};

struct MmcStepRecord {
  std::uint64_t t = 0;
  Label label;
  /// Index into tuples() of the tuple active on this round, if any.
  std::optional<std::size_t> tuple;
  bool certified = false;
};

class MmcCertifier {
 public:
  explicit MmcCertifier(double epsilon = 0.05, double lambda = 0.25);

  /// Absorbing after certification.
  const MmcStepRecord& step(Label label);

  bool certified() const { return tau_.has_value(); }
  std::optional<std::uint64_t> tau() const { return tau_; }
  std::optional<Label> certified_leader() const { return certified_leader_; }
  std::optional<Label> leader() const { return leader_; }
  std::optional<Label> runner_up() const { return runner_up_; }
  const CountTable& table() const { return table_; }
  std::span<const MmcTuple> tuples() const { return tuples_; }
  double allocated_alpha() const { return allocated_; }
  double epsilon() const { return epsilon_; }
  const MmcStepRecord& last() const { return last_; }

 private:
  bool ahead(Label a, Label b) const;
  std::size_t activate(Label leader, Label runner_up);

  double epsilon_;
  double lambda_;
  double log_up_;
  double log_down_;
  CountTable table_;
  std::optional<Label> leader_;
  std::optional<Label> runner_up_;
  std::vector<MmcTuple> tuples_;
  std::map<std::pair<Label, Label>, std::size_t> registry_;
  double allocated_ = 0.0;
  MmcStepRecord last_;
  std::optional<std::uint64_t> tau_;
  std::optional<Label> certified_leader_;
};

}  // namespace modecert
