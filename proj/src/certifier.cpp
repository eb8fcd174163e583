#include "modecert/certifier.hpp"

#include <algorithm>
#include <limits>

#include "modecert/eprocess.hpp"

namespace modecert {

CertifierConfig CertifierConfig::unique_mode(Label target, double epsilon) {
  CertifierConfig config;
  config.targets = {target};
  config.budget = BudgetSplit(epsilon);
  return config;
}

CertifierConfig CertifierConfig::top_k(std::vector<Label> targets, double epsilon) {
  CertifierConfig config;
  config.targets = std::move(targets);
  config.budget = BudgetSplit(epsilon);
  config.mode = CertifyMode::top_k;
  return config;
}

void CertifierConfig::validate() const {
  if (targets.empty()) throw ConfigError("certifier needs at least one target");
  if (mode == CertifyMode::unique_mode && targets.size() != 1) {
    throw ConfigError("unique-mode certification takes exactly one target");
  }
  auto sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("target set contains duplicate labels");
  }
  if (pairwise_grid.kind() != GridKind::pairwise) throw ConfigError("pairwise grid has the wrong kind");
  if (lcb_grid.kind() != GridKind::lcb) throw ConfigError("LCB grid has the wrong kind");
}

CiteCertifier::CiteCertifier(CertifierConfig config)
    : config_((config.validate(), std::move(config))),
      table_(config_.targets),
      unseen_(config_.budget.alpha_u(), config_.unseen_table),
      threshold_pw_(config_.budget.log_threshold_pw()),
      threshold_r_(config_.budget.log_threshold_r()) {}

const StepRecord& CiteCertifier::step(Label label) {
  if (tau_) return last_;

  table_.observe(label);
  const std::uint64_t t = table_.t();

  StepRecord rec;
  rec.t = t;
  rec.label = label;
  rec.unseen = unseen_(t);

  if (const auto outsider = table_.runner_up()) {
    const std::uint64_t n_out = table_.count(*outsider);
    double worst = std::numeric_limits<double>::infinity();
    for (Label s : config_.targets) {
      worst = std::min(worst, mixture_log_e(config_.pairwise_grid, table_.count(s), n_out));
    }
    rec.pw_vacuous = false;
    rec.pw_log_e = worst;
    rec.pw_pass = worst >= threshold_pw_;
  } else {
    rec.pw_pass = true;
  }
  if (rec.pw_pass && !diagnostics_.tau_pw) diagnostics_.tau_pw = t;
  if (rec.pw_pass && !rec.pw_vacuous && !diagnostics_.tau_pw_evidence) diagnostics_.tau_pw_evidence = t;

  if (config_.evaluation == Evaluation::full) {
    double lowest = std::numeric_limits<double>::infinity();
    for (Label s : config_.targets) {
      lowest = std::min(lowest, lower_conf_bound({config_.lcb_grid, table_.count(s), t, threshold_r_}));
    }
    rec.lcb = lowest;
    rec.lu_pass = lowest > rec.unseen;
  } else if (rec.pw_pass || !diagnostics_.tau_lu) {
    rec.lu_pass = std::all_of(config_.targets.begin(), config_.targets.end(), [&](Label s) {
      return lcb_exceeds({config_.lcb_grid, table_.count(s), t, threshold_r_}, rec.unseen);
    });
  }
  if (rec.lu_pass && !diagnostics_.tau_lu) diagnostics_.tau_lu = t;

  rec.certified = rec.pw_pass && rec.lu_pass;
  if (rec.certified) tau_ = t;
  last_ = rec;
  return last_;
}

}  // namespace modecert
