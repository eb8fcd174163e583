#include "modecert/bounds.hpp"

#include <cmath>

namespace modecert {

namespace {

void check_inputs(const LcbInputs& in) {
  if (in.grid.kind() != GridKind::lcb) throw InvalidParameter("LCB needs an LCB grid");
  if (in.n_r > in.t) throw InvalidParameter("n_r exceeds t");
}

double mixture_at(double q, const LcbInputs& in) {
  const auto points = in.grid.points();
  const double hits = static_cast<double>(in.n_r);
  const double misses = static_cast<double>(in.t - in.n_r);
  return log_mix(in.grid.log_weights(), [&](std::size_t i) {
    const double lambda = points[i];
    if (!in_lcb_support(lambda, q)) return kNegInf;
    return hits * std::log1p(lambda * (1.0 - q)) + misses * std::log1p(-lambda * q);
  });
}

}  // namespace

double lcb_mixture_log(double q, const LcbInputs& in) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidParameter("q must lie in (0,1]");
  check_inputs(in);
  return mixture_at(q, in);
}

double lower_conf_bound(const LcbInputs& in) {
  check_inputs(in);
  if (in.t == 0 || in.n_r == 0) return 0.0;
  const double p_hat = static_cast<double>(in.n_r) / static_cast<double>(in.t);
  return detail::bisect_lcb(p_hat, in.threshold_log,
                            [&](double q) { return mixture_at(q, in); });
}

bool lcb_exceeds(const LcbInputs& in, double bound) {
  check_inputs(in);
  if (in.t == 0 || in.n_r == 0) return 0.0 > bound;
  const double p_hat = static_cast<double>(in.n_r) / static_cast<double>(in.t);
  return detail::lcb_exceeds(p_hat, in.threshold_log, bound,
                             [&](double q) { return mixture_at(q, in); });
}

double unseen_bound(std::uint64_t t, double alpha_u) {
  if (t == 0) throw InvalidParameter("unseen bound needs t >= 1");
  if (!(alpha_u > 0.0 && alpha_u < 1.0)) throw InvalidParameter("alpha_u must lie in (0,1)");
  const double log_alpha = std::log(alpha_u);
  const double n = static_cast<double>(t);
  // f_t(u) = u^{-1}(1-u)^t is strictly decreasing on (0,1] with f_t(1) = 0.
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > kUnseenTolerance) {
    const double mid = 0.5 * (lo + hi);
    const double log_f = -std::log(mid) + n * std::log1p(-mid);
    if (log_f <= log_alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

UnseenBoundTable::UnseenBoundTable(double alpha_u, std::uint64_t horizon) : alpha_u_(alpha_u) {
  values_.reserve(horizon);
  for (std::uint64_t t = 1; t <= horizon; ++t) values_.push_back(unseen_bound(t, alpha_u));
}

double UnseenBoundTable::operator()(std::uint64_t t) const {
  if (t >= 1 && t <= values_.size()) return values_[t - 1];
  return unseen_bound(t, alpha_u_);
}

UnseenBoundCache::UnseenBoundCache(double alpha_u, std::shared_ptr<const UnseenBoundTable> shared)
    : alpha_u_(alpha_u), shared_(std::move(shared)) {
  if (shared_ && shared_->alpha_u() != alpha_u_) {
    throw InvalidParameter("shared unseen table built for a different alpha_u");
  }
}

double UnseenBoundCache::operator()(std::uint64_t t) {
  if (shared_ && t <= shared_->horizon()) return (*shared_)(t);
  if (t == 0) throw InvalidParameter("unseen bound needs t >= 1");
  // local_ continues where the shared prefix stops.
  const std::uint64_t offset = shared_ ? shared_->horizon() : 0;
  while (offset + local_.size() < t) {
    local_.push_back(unseen_bound(offset + local_.size() + 1, alpha_u_));
  }
  return local_[t - offset - 1];
}

}  // namespace modecert
