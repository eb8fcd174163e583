#pragma once

// Streaming CITE stopping rule: certify a prespecified target (or a target
// set, for top-k) once the pairwise mixture e-value against the strongest
// observed outsider clears 1/α_pw and, at the same step, the target's LCB
// exceeds the unseen-category bound.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "modecert/bounds.hpp"
#include "modecert/core.hpp"

namespace modecert {

enum class CertifyMode { unique_mode, top_k };

/// full: every quantity in StepRecord is evaluated each step (traces, CLI).
/// decision_only: the LCB value is evaluated only as far as the verdict and
/// the first-crossing diagnostics need it. Verdicts are identical.
enum class Evaluation { full, decision_only };

struct CertifierConfig {
  std::vector<Label> targets;
  BudgetSplit budget{};
  GridSpec pairwise_grid = default_pairwise_grid();
  GridSpec lcb_grid = default_lcb_grid();
  CertifyMode mode = CertifyMode::unique_mode;
  Evaluation evaluation = Evaluation::full;
  /// Optional precomputed U_t values shared between certifiers.
  std::shared_ptr<const UnseenBoundTable> unseen_table;

  static CertifierConfig unique_mode(Label target, double epsilon = 0.05);
  static CertifierConfig top_k(std::vector<Label> targets, double epsilon = 0.05);

  /// Throws ConfigError.
  void validate() const;
};

struct StepRecord {
  std::uint64_t t = 0;
  Label label;
  /// No outsider observed yet; the pairwise condition then holds vacuously.
  bool pw_vacuous = true;
  /// Pairwise log e-value at the runner-up (min over targets for top-k).
  /// Absent when vacuous or not evaluated.
  std::optional<double> pw_log_e;
  bool pw_pass = false;
  /// L_t (min over targets for top-k). Absent when not evaluated.
  std::optional<double> lcb;
  bool lu_pass = false;
  double unseen = 1.0;
  bool certified = false;
};

/// First times each stopping condition held on its own. tau_pw counts
/// vacuous passes (no outsider seen yet); tau_pw_evidence is the first time
/// an actual pairwise e-value reached the threshold.
struct Diagnostics {
  std::optional<std::uint64_t> tau_pw;
  std::optional<std::uint64_t> tau_pw_evidence;
  std::optional<std::uint64_t> tau_lu;
};

class CiteCertifier {
 public:
  explicit CiteCertifier(CertifierConfig config);

  /// Consumes one observation. Once certified the state is absorbing and
  /// further calls return the certifying record unchanged.
  const StepRecord& step(Label label);

  bool certified() const { return tau_.has_value(); }
  std::optional<std::uint64_t> tau() const { return tau_; }
  Diagnostics diagnostics() const { return diagnostics_; }
  const CountTable& table() const { return table_; }
  const StepRecord& last() const { return last_; }
  const CertifierConfig& config() const { return config_; }

 private:
  CertifierConfig config_;
  CountTable table_;
  UnseenBoundCache unseen_;
  double threshold_pw_;
  double threshold_r_;
  StepRecord last_;
  Diagnostics diagnostics_;
  std::optional<std::uint64_t> tau_;
};

}  // namespace modecert
