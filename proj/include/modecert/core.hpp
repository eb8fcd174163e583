#pragma once

// Shared domain types: interned labels, running count tables, betting grids
// and the error budget split.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace modecert {

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSumTolerance = 1e-12;

/// Opaque category identifier. The index is the interning order, which is
/// also the first-seen order for labels produced by a LabelTable.
class Label {
 public:
  constexpr Label() = default;
  constexpr explicit Label(std::uint32_t index) : index_(index) {}

  constexpr std::uint32_t index() const { return index_; }

  friend constexpr auto operator<=>(Label, Label) = default;

 private:
  std::uint32_t index_ = 0;
};

/// String interner. Equal strings map to equal labels and ids are handed out
/// densely in first-intern order.
class LabelTable {
 public:
  Label intern(std::string_view name);
  std::optional<Label> find(std::string_view name) const;
  const std::string& name(Label label) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

/// Running counts N_t(a) over a stream, with the runner-up among non-target
/// labels maintained incrementally. Ties in the runner-up are broken by
/// first-seen order within this table.
class CountTable {
 public:
  CountTable() = default;
  explicit CountTable(Label target) : targets_{target} {}
  explicit CountTable(std::vector<Label> targets);

  void observe(Label label);

  std::uint64_t t() const { return t_; }
  std::uint64_t count(Label label) const;
  /// p̂_t(a); zero before the first observation.
  double frequency(Label label) const;

  /// Observed set 𝒜_t in first-seen order.
  std::span<const Label> observed() const { return observed_; }
  std::optional<std::uint32_t> first_seen(Label label) const;

  std::span<const Label> targets() const { return targets_; }
  bool is_target(Label label) const;

  /// argmax of N_t(a) over observed non-target labels.
  std::optional<Label> runner_up() const { return runner_up_; }
  std::uint64_t runner_up_count() const;

 private:
  static constexpr std::uint32_t kUnseen = UINT32_MAX;

  std::vector<Label> targets_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint32_t> order_;
  std::vector<Label> observed_;
  std::optional<Label> runner_up_;
  std::uint64_t t_ = 0;
};

enum class GridKind { pairwise, lcb };

/// Finite betting-parameter grid with positive mixture weights summing to at
/// most one. Pairwise grids live in (0,1); LCB grids in (0,∞). Points are
/// kept strictly increasing.
class GridSpec {
 public:
  static GridSpec pairwise(std::vector<double> points, std::vector<double> weights);
  static GridSpec lcb(std::vector<double> points, std::vector<double> weights);
  /// Uniform weights 1/K over the given points.
  static GridSpec uniform(GridKind kind, std::vector<double> points);

  GridKind kind() const { return kind_; }
  std::size_t size() const { return points_.size(); }
  std::span<const double> points() const { return points_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> log_weights() const { return log_weights_; }
  /// log(1+λ) and log(1−λ) per point; only populated for pairwise grids.
  std::span<const double> log_up() const { return log_up_; }
  std::span<const double> log_down() const { return log_down_; }

 private:
  GridSpec(GridKind kind, std::vector<double> points, std::vector<double> weights);

  GridKind kind_ = GridKind::pairwise;
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> log_up_;
  std::vector<double> log_down_;
};

/// {2^-k : 1 ≤ k ≤ K}, K = ⌈log₂(8/δ₀)⌉, uniform weights.
GridSpec geometric_pairwise_grid(double delta0);

inline constexpr double kDefaultDelta0 = 0.25;

GridSpec default_pairwise_grid();
/// {2^3, 2^2, ..., 2^-10} with uniform weights.
GridSpec default_lcb_grid();

/// Split of the error level ε across the pairwise, LCB and unseen components.
class BudgetSplit {
 public:
  /// Equal split of ε = 0.05.
  BudgetSplit() : BudgetSplit(0.05) {}
  /// Equal split ε/3 per component.
  explicit BudgetSplit(double epsilon);
  BudgetSplit(double epsilon, double alpha_pw, double alpha_r, double alpha_u);

  double epsilon() const { return epsilon_; }
  double alpha_pw() const { return alpha_pw_; }
  double alpha_r() const { return alpha_r_; }
  double alpha_u() const { return alpha_u_; }

  /// log(1/α) thresholds used in log-space comparisons.
  double log_threshold_pw() const;
  double log_threshold_r() const;

 private:
  double epsilon_;
  double alpha_pw_;
  double alpha_r_;
  double alpha_u_;
};

}  // namespace modecert

template <>
struct std::hash<modecert::Label> {
  std::size_t operator()(modecert::Label label) const noexcept {
    return std::hash<std::uint32_t>{}(label.index());
  }
};
