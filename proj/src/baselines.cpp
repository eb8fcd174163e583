#include "modecert/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "modecert/bounds.hpp"

namespace modecert {

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameter("epsilon must lie in (0,1)");
}

}  // namespace

double sign_test_pvalue(std::uint64_t n_r, std::uint64_t n_a) {
  if (n_r == 0) return 1.0;
  // P(X ≥ k) for X ~ Bin(n, p) equals I_p(k, n − k + 1).
  return boost::math::ibeta(static_cast<double>(n_r), static_cast<double>(n_a) + 1.0, 0.5);
}

double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double alpha) {
  if (successes > trials) throw InvalidParameter("successes exceed trials");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0,1)");
  if (successes == 0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(successes),
                                static_cast<double>(trials - successes) + 1.0, alpha);
}

BonferroniVerdict bonferroni_verdict(const CountTable& counts, Label target, double epsilon) {
  check_epsilon(epsilon);
  if (counts.t() == 0) throw InvalidParameter("sample must be nonempty");
  BonferroniVerdict v;
  const std::uint64_t n_r = counts.count(target);
  v.target_seen = n_r > 0;

  std::uint64_t competitors = 0;
  std::uint64_t n_max = 0;
  for (Label a : counts.observed()) {
    if (a == target) continue;
    ++competitors;
    n_max = std::max(n_max, counts.count(a));
  }
  bool pairwise_ok = true;
  if (competitors > 0) {
    v.pairwise_level = 0.5 * epsilon / static_cast<double>(competitors);
    // The tail probability grows with n_a, so the largest competitor decides.
    v.worst_pvalue = sign_test_pvalue(n_r, n_max);
    pairwise_ok = *v.worst_pvalue <= v.pairwise_level;
  }

  v.cp_lower = clopper_pearson_lower(n_r, counts.t(), 0.25 * epsilon);
  v.unseen = unseen_bound(counts.t(), 0.25 * epsilon);
  v.certified = v.target_seen && pairwise_ok && v.cp_lower > v.unseen;
  return v;
}

bool bonferroni_certify(std::span<const Label> sample, Label target, double epsilon) {
  if (sample.empty()) throw InvalidParameter("sample must be nonempty");
  CountTable counts;
  for (Label x : sample) counts.observe(x);
  return bonferroni_verdict(counts, target, epsilon).certified;
}

MmcCertifier::MmcCertifier(double epsilon, double lambda)
    : epsilon_(epsilon), lambda_(lambda) {
  check_epsilon(epsilon);
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidParameter("lambda must lie in (0,1)");
  log_up_ = std::log1p(lambda);
  log_down_ = std::log1p(-lambda);
}

bool MmcCertifier::ahead(Label a, Label b) const {
  const auto na = table_.count(a);
  const auto nb = table_.count(b);
  if (na != nb) return na > nb;
  return *table_.first_seen(a) < *table_.first_seen(b);
}

std::size_t MmcCertifier::activate(Label leader, Label runner_up) {
  const auto [it, fresh] = registry_.try_emplace({leader, runner_up}, tuples_.size());
  if (fresh) {
    MmcTuple tuple;
    tuple.leader = leader;
    tuple.runner_up = runner_up;
    tuple.order = static_cast<std::uint32_t>(tuples_.size() + 1);
    tuple.alpha = std::ldexp(epsilon_, -static_cast<int>(tuple.order));
    allocated_ += tuple.alpha;
    tuples_.push_back(tuple);
  }
  return it->second;
}

const MmcStepRecord& MmcCertifier::step(Label label) {
  if (tau_) return last_;

  MmcStepRecord rec;
  rec.label = label;

  // Bets use the tuple fixed before this observation.
  if (leader_ && runner_up_) {
    const std::size_t id = activate(*leader_, *runner_up_);
    auto& tuple = tuples_[id];
    if (label == tuple.leader) {
      tuple.log_pairwise += log_up_;
      tuple.log_residual += log_up_;
    } else if (label == tuple.runner_up) {
      tuple.log_pairwise += log_down_;
    } else {
      tuple.log_residual += log_down_;
    }
    rec.tuple = id;
  }

  table_.observe(label);
  rec.t = table_.t();
  if (!leader_) {
    leader_ = label;
  } else if (label != *leader_) {
    if (label == runner_up_) {
      if (ahead(label, *leader_)) std::swap(*leader_, *runner_up_);
    } else if (ahead(label, *leader_)) {
      runner_up_ = leader_;
      leader_ = label;
    } else if (!runner_up_ || ahead(label, *runner_up_)) {
      runner_up_ = label;
    }
  }

  if (rec.tuple) {
    const auto& tuple = tuples_[*rec.tuple];
    const double threshold = -std::log(tuple.alpha);
    if (tuple.log_pairwise >= threshold && tuple.log_residual >= threshold) {
      rec.certified = true;
      tau_ = rec.t;
      certified_leader_ = tuple.leader;
    }
  }
  last_ = rec;
  return last_;
}

}  // namespace modecert
