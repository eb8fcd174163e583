#pragma once

// Synthetic categorical distributions, null-witness fixtures, the rank-based
// weight model and the seeded Monte-Carlo trial runner.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "modecert/certifier.hpp"
#include "modecert/core.hpp"

namespace modecert {

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer applied to seed + (index + 1)·0x9E3779B97F4A7C15.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

/// mt19937_64 with a fixed double conversion so streams are bit-exact
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

/// Finite categorical distribution over labels 0..size()-1.
class Distribution {
 public:
  /// Masses must be nonnegative and sum to 1 within 1e-12.
  explicit Distribution(std::vector<double> masses);

  std::size_t size() const { return masses_.size(); }
  double mass(Label label) const;
  std::span<const double> masses() const { return masses_; }
  /// Inverse-transform draw.
  Label sample(Rng& rng) const;

 private:
  std::vector<double> masses_;
  std::vector<double> cdf_;
};

enum class TailKind { zipf, uniform };

struct SettingSpec {
  int id = 0;
  std::uint32_t label_budget = 0;  // nominal K, informational only
  double p_r = 0.0;
  double delta = 0.0;
  TailKind tail = TailKind::uniform;
  double zipf_exponent = 0.0;
  std::uint32_t tail_labels = 0;
};

/// The five simulation settings; throws ConfigError for other ids.
SettingSpec setting_preset(int id);

/// Label 0 carries p_r, label 1 carries p_r − δ, labels 2.. carry the tail
/// (weights ∝ (j+1)^{-s}, capped at p_r − δ with the excess redistributed).
/// A zero-mass runner-up with no tail yields a single-atom distribution.
/// Throws ConfigError for infeasible specs.
Distribution build_setting(const SettingSpec& spec);

/// Largest-mass label other than target (lowest index on ties).
std::optional<Label> strongest_competitor(const Distribution& dist, Label target);

enum class WitnessKind { swap, midpoint, hidden };

/// Null-hypothesis witness built from dist. hidden appends one fresh label.
/// Throws FixtureError when swap or midpoint has no positive competitor.
Distribution null_witness(const Distribution& dist, Label target, WitnessKind kind);

/// W = clip(base(rank) + U(−0.05, 0.05), 0.01, 1) with base 0.95·e^{−γ·rank}
/// on the ten heaviest labels and 0.1 elsewhere. Ranks start at 1 and follow
/// descending mass, lower label index first on ties.
class RankWeightSampler {
 public:
  RankWeightSampler(double gamma, const Distribution& dist);
  double base(Label label) const;
  std::uint32_t rank(Label label) const;
  double sample(Label label, Rng& rng) const;

 private:
  double gamma_;
  std::vector<std::uint32_t> rank_;
};

enum class Method { cite, wcite, bonferroni, mmc };
enum class Case { A, B };

std::string_view to_string(Method method);
std::string_view to_string(Case c);
/// Throws ConfigError on unknown names.
Method parse_method(std::string_view name);
Case parse_case(std::string_view name);

struct TrialOptions {
  double epsilon = 0.05;
  double pairwise_delta0 = kDefaultDelta0;
  double gamma = 0.0;  // rank weight model, W-CITE only
  unsigned threads = 1;
};

struct TrialReport {
  std::string setting;
  Method method = Method::cite;
  Case trial_case = Case::A;
  std::uint64_t budget = 0;
  double rate = 0.0;
  double stderr_rate = 0.0;
  /// Means over replicates where the event happened by the budget; NaN when
  /// it never did.
  double tau_mean = 0.0;
  double tau_pw_mean = 0.0;
  double tau_lu_mean = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  /// Mean observed category count at the budget (pool reports only).
  std::optional<double> k_mean;
};

/// Integer sums per budget, so merging in any order gives identical results.
struct BudgetTally {
  std::uint64_t certified = 0;
  std::uint64_t tau_sum = 0;
  std::uint64_t pw_count = 0;
  std::uint64_t pw_sum = 0;
  std::uint64_t lu_count = 0;
  std::uint64_t lu_sum = 0;
  std::uint64_t k_sum = 0;
  friend bool operator==(const BudgetTally&, const BudgetTally&) = default;
};

struct TrialTally {
  std::uint64_t reps = 0;
  std::vector<BudgetTally> budgets;
  void merge(const TrialTally& other);
  friend bool operator==(const TrialTally&, const TrialTally&) = default;
};

/// Fills labels (and weights, when requested) for replicate k. Must be safe
/// to call concurrently.
using StreamFn = std::function<void(std::uint64_t rep, std::size_t length, bool with_weights,
                                    std::vector<Label>& labels, std::vector<double>& weights)>;

struct TrialPlan {
  Method method = Method::cite;
  Label target;
  std::vector<std::uint64_t> budgets;  // strictly increasing
  std::uint64_t reps = 0;
  TrialOptions options;
};

/// Runs plan.reps replicates, optionally across threads, and reduces them.
TrialTally run_replicates(const TrialPlan& plan, const StreamFn& stream);

/// Outcome of one replicate folded into a tally; exposed for tests.
void run_one(const TrialPlan& plan, std::span<const Label> labels, std::span<const double> weights,
             const CertifierConfig& base, TrialTally& tally);

std::vector<TrialReport> summarize(const TrialTally& tally, const TrialPlan& plan,
                                   std::string setting, std::uint64_t seed, bool with_k);

/// Stream for replicate k: labels from child_seed(seed, 2k), weights from
/// child_seed(seed, 2k+1).
std::vector<TrialReport> run_trials(const SettingSpec& spec, Method method, Case trial_case,
                                    std::vector<std::uint64_t> budgets, std::uint64_t reps,
                                    std::uint64_t seed, const TrialOptions& options = {});
std::vector<TrialReport> run_trials(const Distribution& dist, std::string setting, Method method,
                                    Label target, Case trial_case,
                                    std::vector<std::uint64_t> budgets, std::uint64_t reps,
                                    std::uint64_t seed, const TrialOptions& options = {});

struct SweepPoint {
  double p_r = 0.0;
  double delta = 0.0;
};

struct SweepRow {
  double p_r = 0.0;
  double delta = 0.0;
  double tau_pw_mean = 0.0;
  double tau_lu_mean = 0.0;
  std::uint64_t pw_crossed = 0;
  std::uint64_t lu_crossed = 0;
  std::uint64_t reps = 0;
};

/// Mode p_r, runner-up p_r − δ, and a uniform tail on
/// max(100, ⌈rest/(p_r − δ)⌉) labels.
Distribution sweep_distribution(const SweepPoint& point);

/// First-crossing times of the pairwise e-value (vacuous rounds excluded)
/// and of L_t > U_t for CITE, streaming each replicate until both have
/// crossed or the horizon ends.
std::vector<SweepRow> bottleneck_sweep(std::span<const SweepPoint> points, std::uint64_t reps,
                                       std::uint64_t seed, std::uint64_t horizon,
                                       const TrialOptions& options = {});

void write_reports_csv(std::ostream& out, std::span<const TrialReport> reports, bool with_k);
nlohmann::json reports_to_json(std::span<const TrialReport> reports, bool with_k);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);

}  // namespace modecert
