#include "modecert/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modecert {

Label LabelTable::intern(std::string_view name) {
  std::string key(name);
  if (auto it = ids_.find(key); it != ids_.end()) return Label(it->second);
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  ids_.emplace(std::move(key), id);
  return Label(id);
}

std::optional<Label> LabelTable::find(std::string_view name) const {
  if (auto it = ids_.find(std::string(name)); it != ids_.end()) return Label(it->second);
  return std::nullopt;
}

const std::string& LabelTable::name(Label label) const {
  if (label.index() >= names_.size()) throw InvalidParameter("label not interned in this table");
  return names_[label.index()];
}

CountTable::CountTable(std::vector<Label> targets) : targets_(std::move(targets)) {}

bool CountTable::is_target(Label label) const {
  return std::find(targets_.begin(), targets_.end(), label) != targets_.end();
}

void CountTable::observe(Label label) {
  const auto i = label.index();
  if (i >= counts_.size()) {
    counts_.resize(i + 1, 0);
    order_.resize(i + 1, kUnseen);
  }
  if (counts_[i] == 0) {
    order_[i] = static_cast<std::uint32_t>(observed_.size());
    observed_.push_back(label);
  }
  ++counts_[i];
  ++t_;

  if (is_target(label)) return;
  // Only this label's count moved, so the new runner-up is either the old
  // one or this label.
  if (!runner_up_) {
    runner_up_ = label;
    return;
  }
  const auto r = runner_up_->index();
  if (counts_[i] > counts_[r] || (counts_[i] == counts_[r] && order_[i] < order_[r])) {
    runner_up_ = label;
  }
}

std::uint64_t CountTable::count(Label label) const {
  const auto i = label.index();
  return i < counts_.size() ? counts_[i] : 0;
}

double CountTable::frequency(Label label) const {
  return t_ == 0 ? 0.0 : static_cast<double>(count(label)) / static_cast<double>(t_);
}

std::optional<std::uint32_t> CountTable::first_seen(Label label) const {
  const auto i = label.index();
  if (i >= order_.size() || order_[i] == kUnseen) return std::nullopt;
  return order_[i];
}

std::uint64_t CountTable::runner_up_count() const {
  return runner_up_ ? count(*runner_up_) : 0;
}

GridSpec::GridSpec(GridKind kind, std::vector<double> points, std::vector<double> weights)
    : kind_(kind), points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw InvalidParameter("grid must contain at least one point");
  if (points_.size() != weights_.size()) {
    throw InvalidParameter("grid points and weights differ in length");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double lambda = points_[i];
    const bool in_range = kind_ == GridKind::pairwise
                              ? (lambda > 0.0 && lambda < 1.0)
                              : (lambda > 0.0 && std::isfinite(lambda));
    if (!in_range) {
      throw InvalidParameter(kind_ == GridKind::pairwise ? "pairwise grid point outside (0,1)"
                                                         : "LCB grid point outside (0,inf)");
    }
    if (i > 0 && !(points_[i - 1] < lambda)) {
      throw InvalidParameter("grid points must be strictly increasing");
    }
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw InvalidParameter("grid weights must be positive");
    }
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (total > 1.0 + kSumTolerance) throw InvalidParameter("grid weights sum above 1");

  log_weights_.reserve(weights_.size());
  for (double w : weights_) log_weights_.push_back(std::log(w));
  if (kind_ == GridKind::pairwise) {
    for (double lambda : points_) {
      log_up_.push_back(std::log1p(lambda));
      log_down_.push_back(std::log1p(-lambda));
    }
  }
}

GridSpec GridSpec::pairwise(std::vector<double> points, std::vector<double> weights) {
  return GridSpec(GridKind::pairwise, std::move(points), std::move(weights));
}

GridSpec GridSpec::lcb(std::vector<double> points, std::vector<double> weights) {
  return GridSpec(GridKind::lcb, std::move(points), std::move(weights));
}

GridSpec GridSpec::uniform(GridKind kind, std::vector<double> points) {
  std::vector<double> weights(points.size(), 1.0 / static_cast<double>(points.size()));
  std::sort(points.begin(), points.end());
  return GridSpec(kind, std::move(points), std::move(weights));
}

GridSpec geometric_pairwise_grid(double delta0) {
  if (!(delta0 > 0.0 && delta0 <= 1.0)) throw InvalidParameter("delta0 must lie in (0,1]");
  const auto k_max = static_cast<int>(std::ceil(std::log2(8.0 / delta0)));
  std::vector<double> points;
  for (int k = k_max; k >= 1; --k) points.push_back(std::ldexp(1.0, -k));
  return GridSpec::uniform(GridKind::pairwise, std::move(points));
}

GridSpec default_pairwise_grid() { return geometric_pairwise_grid(kDefaultDelta0); }

GridSpec default_lcb_grid() {
  std::vector<double> points;
  for (int k = 10; k >= -3; --k) points.push_back(std::ldexp(1.0, -k));
  return GridSpec::uniform(GridKind::lcb, std::move(points));
}

BudgetSplit::BudgetSplit(double epsilon)
    : BudgetSplit(epsilon, epsilon / 3.0, epsilon / 3.0, epsilon / 3.0) {}

BudgetSplit::BudgetSplit(double epsilon, double alpha_pw, double alpha_r, double alpha_u)
    : epsilon_(epsilon), alpha_pw_(alpha_pw), alpha_r_(alpha_r), alpha_u_(alpha_u) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameter("epsilon must lie in (0,1)");
  for (double a : {alpha_pw, alpha_r, alpha_u}) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("component budgets must lie in (0,1)");
  }
  if (alpha_pw + alpha_r + alpha_u > epsilon + kSumTolerance) {
    throw InvalidParameter("alpha_pw + alpha_r + alpha_u exceeds epsilon");
  }
}

double BudgetSplit::log_threshold_pw() const { return -std::log(alpha_pw_); }
double BudgetSplit::log_threshold_r() const { return -std::log(alpha_r_); }

}  // namespace modecert
