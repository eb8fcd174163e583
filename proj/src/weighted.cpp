#include "modecert/weighted.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modecert/eprocess.hpp"

namespace modecert {

WCiteCertifier::WCiteCertifier(CertifierConfig config)
    : config_((config.validate(), std::move(config))),
      target_(config_.targets.front()),
      table_(target_),
      unseen_(config_.budget.alpha_u(), config_.unseen_table),
      threshold_pw_(config_.budget.log_threshold_pw()),
      threshold_r_(config_.budget.log_threshold_r()) {
  if (config_.mode != CertifyMode::unique_mode) {
    throw ConfigError("weighted certification supports a single target only");
  }
  unseen_tally_.fraction.assign(config_.pairwise_grid.size(), 0.0);
  tally(target_);
}

WCiteCertifier::Tally& WCiteCertifier::tally(Label label) {
  if (label.index() >= tallies_.size()) tallies_.resize(label.index() + 1);
  auto& entry = tallies_[label.index()];
  if (entry.fraction.empty()) entry.fraction.assign(config_.pairwise_grid.size(), 0.0);
  return entry;
}

double WCiteCertifier::log_e_against(const Tally& competitor) const {
  const auto& mine = tallies_[target_.index()];
  const auto up = config_.pairwise_grid.log_up();
  const auto down = config_.pairwise_grid.log_down();
  const double n_r = static_cast<double>(mine.unit);
  const double n_a = static_cast<double>(competitor.unit);
  return log_mix(config_.pairwise_grid.log_weights(), [&](std::size_t i) {
    return (n_r * up[i] + n_a * down[i]) + (mine.fraction[i] + competitor.fraction[i]);
  });
}

double WCiteCertifier::pairwise_log_e(Label competitor) const {
  if (competitor == target_) throw InvalidParameter("competitor must differ from the target");
  const bool seen = competitor.index() < tallies_.size() && !tallies_[competitor.index()].fraction.empty();
  return log_e_against(seen ? tallies_[competitor.index()] : unseen_tally_);
}

double WCiteCertifier::all_competitors_min() const {
  double lowest = std::numeric_limits<double>::infinity();
  for (Label a : table_.observed()) {
    if (a == target_) continue;
    lowest = std::min(lowest, log_e_against(tallies_[a.index()]));
  }
  return lowest;
}

bool WCiteCertifier::all_competitors_pass(double runner_up_value) const {
  if (runner_up_value < threshold_pw_) return false;
  // Each competitor factor satisfies log(1−λW) ≥ log(1−λ), so the largest
  // raw count gives a common lower bound for every competitor.
  const auto& mine = tallies_[target_.index()];
  const auto up = config_.pairwise_grid.log_up();
  const auto down = config_.pairwise_grid.log_down();
  const double n_r = static_cast<double>(mine.unit);
  const double n_max = static_cast<double>(table_.runner_up_count());
  const double floor = log_mix(config_.pairwise_grid.log_weights(), [&](std::size_t i) {
    return n_r * up[i] + mine.fraction[i] + n_max * down[i];
  });
  if (floor >= threshold_pw_ + detail::kScreenMargin) return true;
  for (Label a : table_.observed()) {
    if (a == target_) continue;
    if (log_e_against(tallies_[a.index()]) < threshold_pw_) return false;
  }
  return true;
}

double WCiteCertifier::log_mix_lcb(double q) const {
  const auto points = config_.lcb_grid.points();
  const double misses = static_cast<double>(table_.t() - table_.count(target_));
  return log_mix(config_.lcb_grid.log_weights(), [&](std::size_t i) {
    const double lambda = points[i];
    if (!in_lcb_support(lambda, q)) return kNegInf;
    double hits = 0.0;
    for (const auto& [w, multiplicity] : target_weights_) {
      hits += static_cast<double>(multiplicity) * std::log1p(lambda * (w - q));
    }
    return hits + misses * std::log1p(-lambda * q);
  });
}

double WCiteCertifier::weighted_mean() const {
  return table_.t() == 0 ? 0.0 : target_weight_sum_ / static_cast<double>(table_.t());
}

std::optional<double> WCiteCertifier::weighted_lcb_log(double q, double lambda) const {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in (0,1]");
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
  if (!in_lcb_support(lambda, q)) return std::nullopt;
  const double misses = static_cast<double>(table_.t() - table_.count(target_));
  double hits = 0.0;
  for (const auto& [w, multiplicity] : target_weights_) {
    hits += static_cast<double>(multiplicity) * std::log1p(lambda * (w - q));
  }
  return hits + misses * std::log1p(-lambda * q);
}

double WCiteCertifier::weighted_lcb_mixture_log(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in (0,1]");
  return log_mix_lcb(q);
}

double WCiteCertifier::weighted_lower_conf_bound() const {
  if (table_.t() == 0) return 0.0;
  return detail::bisect_lcb(weighted_mean(), threshold_r_, [&](double q) { return log_mix_lcb(q); });
}

const StepRecord& WCiteCertifier::step(WeightedObservation obs) {
  if (!(obs.weight >= 0.0 && obs.weight <= 1.0)) {
    throw InvalidObservation("observation weight outside [0,1]");
  }
  if (tau_) return last_;

  const double w = obs.weight + 0.0;  // folds -0.0 into 0.0
  table_.observe(obs.label);
  const std::uint64_t t = table_.t();
  auto& entry = tally(obs.label);
  const bool is_target = obs.label == target_;
  if (w == 1.0) {
    ++entry.unit;
  } else {
    const auto points = config_.pairwise_grid.points();
    for (std::size_t i = 0; i < points.size(); ++i) {
      entry.fraction[i] += is_target ? std::log1p(points[i] * w) : std::log1p(-points[i] * w);
    }
  }
  if (is_target) {
    target_weight_sum_ += w;
    if (auto [it, fresh] = weight_slot_.try_emplace(w, target_weights_.size()); fresh) {
      target_weights_.emplace_back(w, 1);
    } else {
      ++target_weights_[it->second].second;
    }
  }

  StepRecord rec;
  rec.t = t;
  rec.label = obs.label;
  rec.unseen = unseen_(t);

  if (const auto runner = table_.runner_up()) {
    rec.pw_vacuous = false;
    if (config_.evaluation == Evaluation::full) {
      const double lowest = all_competitors_min();
      rec.pw_log_e = lowest;
      rec.pw_pass = lowest >= threshold_pw_;
    } else {
      rec.pw_pass = all_competitors_pass(log_e_against(tallies_[runner->index()]));
    }
  } else {
    rec.pw_pass = true;
  }
  if (rec.pw_pass && !diagnostics_.tau_pw) diagnostics_.tau_pw = t;
  if (rec.pw_pass && !rec.pw_vacuous && !diagnostics_.tau_pw_evidence) diagnostics_.tau_pw_evidence = t;

  if (config_.evaluation == Evaluation::full) {
    rec.lcb = weighted_lower_conf_bound();
    rec.lu_pass = *rec.lcb > rec.unseen;
  } else if (rec.pw_pass || !diagnostics_.tau_lu) {
    rec.lu_pass = detail::lcb_exceeds(weighted_mean(), threshold_r_, rec.unseen,
                                      [&](double q) { return log_mix_lcb(q); });
  }
  if (rec.lu_pass && !diagnostics_.tau_lu) diagnostics_.tau_lu = t;

  rec.certified = rec.pw_pass && rec.lu_pass;
  if (rec.certified) tau_ = t;
  last_ = rec;
  return last_;
}

}  // namespace modecert
