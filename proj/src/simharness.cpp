#include "modecert/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include "modecert/baselines.hpp"
#include "modecert/weighted.hpp"

namespace modecert {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_or_nan(std::uint64_t sum, std::uint64_t count) {
  return count == 0 ? kNaN : static_cast<double>(sum) / static_cast<double>(count);
}

void validate_budgets(const std::vector<std::uint64_t>& budgets) {
  if (budgets.empty()) throw ConfigError("at least one budget is required");
  if (budgets.front() == 0) throw ConfigError("budgets must be positive");
  if (!std::is_sorted(budgets.begin(), budgets.end()) ||
      std::adjacent_find(budgets.begin(), budgets.end()) != budgets.end()) {
    throw ConfigError("budgets must be strictly increasing");
  }
}

std::string format_number(double x, const char* fmt) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

nlohmann::json json_number(double x) {
  if (std::isnan(x)) return nullptr;
  return x;
}

CertifierConfig base_config(const TrialPlan& plan) {
  auto config = CertifierConfig::unique_mode(plan.target, plan.options.epsilon);
  config.pairwise_grid = geometric_pairwise_grid(plan.options.pairwise_delta0);
  config.evaluation = Evaluation::decision_only;
  config.unseen_table =
      std::make_shared<UnseenBoundTable>(config.budget.alpha_u(), plan.budgets.back());
  return config;
}

}  // namespace

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw InvalidParameter("empty range");
  const std::uint64_t floor = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= floor) return x % n;
  }
}

Distribution::Distribution(std::vector<double> masses) : masses_(std::move(masses)) {
  if (masses_.empty()) throw InvalidParameter("distribution needs at least one label");
  double total = 0.0;
  cdf_.reserve(masses_.size());
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidParameter("masses must be finite and nonnegative");
    total += m;
    cdf_.push_back(total);
  }
  if (std::abs(total - 1.0) > kSumTolerance) throw InvalidParameter("masses must sum to 1");
}

double Distribution::mass(Label label) const {
  return label.index() < masses_.size() ? masses_[label.index()] : 0.0;
}

Label Distribution::sample(Rng& rng) const {
  const double u = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  // Step back over trailing zero-mass labels that rounding could land on.
  while (it != cdf_.begin() && masses_[static_cast<std::size_t>(it - cdf_.begin())] == 0.0) --it;
  return Label(static_cast<std::uint32_t>(it - cdf_.begin()));
}

SettingSpec setting_preset(int id) {
  switch (id) {
    case 1: return {1, 5000, 0.24, 0.215, TailKind::zipf, 1.1, 4987};
    case 2: return {2, 100, 0.60, 0.45, TailKind::uniform, 0.0, 94};
    case 3: return {3, 500, 0.12, 0.01, TailKind::zipf, 1.3, 497};
    case 4: return {4, 10000, 0.06, 0.01, TailKind::zipf, 1.0, 9998};
    case 5: return {5, 1000, 0.35, 0.15, TailKind::zipf, 1.2, 997};
    default: throw ConfigError("setting id must be 1..5");
  }
}

Distribution build_setting(const SettingSpec& spec) {
  if (!(spec.p_r > 0.0 && spec.p_r <= 1.0)) throw ConfigError("p_r must lie in (0,1]");
  if (!(spec.delta > 0.0 && spec.delta <= spec.p_r)) throw ConfigError("delta must lie in (0, p_r]");
  const double cap = spec.p_r - spec.delta;
  const double rest = 1.0 - spec.p_r - cap;
  if (rest < -kSumTolerance) throw ConfigError("p_r and runner-up mass exceed 1");
  const std::size_t m = spec.tail_labels;

  if (m == 0) {
    if (rest > kSumTolerance) throw ConfigError("tail mass left over but no tail labels");
    if (cap == 0.0) return Distribution({1.0});
    return Distribution({spec.p_r, cap});
  }
  if (rest > static_cast<double>(m) * cap + kSumTolerance) {
    throw ConfigError("tail cannot fit under the runner-up mass");
  }

  std::vector<double> tail(m);
  for (std::size_t j = 0; j < m; ++j) {
    tail[j] = spec.tail == TailKind::zipf
                  ? std::pow(static_cast<double>(j + 2), -spec.zipf_exponent)
                  : 1.0;
  }
  const double raw = std::accumulate(tail.begin(), tail.end(), 0.0);
  for (double& w : tail) w *= std::max(rest, 0.0) / raw;

  std::vector<bool> capped(m, false);
  for (;;) {
    double excess = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!capped[j] && tail[j] > cap) {
        excess += tail[j] - cap;
        tail[j] = cap;
        capped[j] = true;
      }
    }
    if (excess == 0.0) break;
    double free_mass = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (!capped[j]) free_mass += tail[j];
    }
    if (!(free_mass > 0.0)) throw ConfigError("tail cannot fit under the runner-up mass");
    for (std::size_t j = 0; j < m; ++j) {
      if (!capped[j]) tail[j] += excess * tail[j] / free_mass;
    }
  }

  std::vector<double> masses;
  masses.reserve(m + 2);
  masses.push_back(spec.p_r);
  masses.push_back(cap);
  masses.insert(masses.end(), tail.begin(), tail.end());
  return Distribution(std::move(masses));
}

std::optional<Label> strongest_competitor(const Distribution& dist, Label target) {
  std::optional<Label> best;
  double best_mass = 0.0;
  const auto masses = dist.masses();
  for (std::uint32_t i = 0; i < masses.size(); ++i) {
    if (i == target.index()) continue;
    if (masses[i] > best_mass) {
      best_mass = masses[i];
      best = Label(i);
    }
  }
  return best;
}

Distribution null_witness(const Distribution& dist, Label target, WitnessKind kind) {
  if (!(dist.mass(target) > 0.0)) throw FixtureError("target has no mass");
  std::vector<double> masses(dist.masses().begin(), dist.masses().end());
  const double p_r = masses[target.index()];
  if (kind == WitnessKind::hidden) {
    masses[target.index()] = 0.5 * p_r;
    masses.push_back(0.5 * p_r);
    return Distribution(std::move(masses));
  }
  const auto rival = strongest_competitor(dist, target);
  if (!rival) throw FixtureError("witness needs a competitor with positive mass");
  double& a = masses[rival->index()];
  if (kind == WitnessKind::swap) {
    masses[target.index()] = a;
    a = p_r;
  } else {
    const double mid = 0.5 * (p_r + a);
    masses[target.index()] = mid;
    a = mid;
  }
  return Distribution(std::move(masses));
}

RankWeightSampler::RankWeightSampler(double gamma, const Distribution& dist) : gamma_(gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be nonnegative");
  const auto masses = dist.masses();
  std::vector<std::uint32_t> order(masses.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return masses[a] > masses[b]; });
  rank_.resize(masses.size());
  for (std::uint32_t pos = 0; pos < order.size(); ++pos) rank_[order[pos]] = pos + 1;
}

std::uint32_t RankWeightSampler::rank(Label label) const {
  return label.index() < rank_.size() ? rank_[label.index()]
                                      : std::numeric_limits<std::uint32_t>::max();
}

double RankWeightSampler::base(Label label) const {
  const std::uint32_t r = rank(label);
  if (r > 10) return 0.1;
  return 0.95 * std::exp(-gamma_ * static_cast<double>(r));
}

double RankWeightSampler::sample(Label label, Rng& rng) const {
  const double noise = 0.1 * rng.uniform() - 0.05;
  return std::clamp(base(label) + noise, 0.01, 1.0);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::cite: return "cite";
    case Method::wcite: return "wcite";
    case Method::bonferroni: return "bonferroni";
    case Method::mmc: return "mmc";
  }
  return "?";
}

std::string_view to_string(Case c) { return c == Case::A ? "A" : "B"; }

Method parse_method(std::string_view name) {
  for (Method m : {Method::cite, Method::wcite, Method::bonferroni, Method::mmc}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

Case parse_case(std::string_view name) {
  if (name == "A" || name == "a") return Case::A;
  if (name == "B" || name == "b") return Case::B;
  throw ConfigError("case must be A or B");
}

void TrialTally::merge(const TrialTally& other) {
  if (budgets.empty()) budgets.resize(other.budgets.size());
  if (budgets.size() != other.budgets.size()) throw InvalidParameter("tally budget mismatch");
  reps += other.reps;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    auto& a = budgets[i];
    const auto& b = other.budgets[i];
    a.certified += b.certified;
    a.tau_sum += b.tau_sum;
    a.pw_count += b.pw_count;
    a.pw_sum += b.pw_sum;
    a.lu_count += b.lu_count;
    a.lu_sum += b.lu_sum;
    a.k_sum += b.k_sum;
  }
}

void run_one(const TrialPlan& plan, std::span<const Label> labels, std::span<const double> weights,
             const CertifierConfig& base, TrialTally& tally) {
  const std::uint64_t horizon = plan.budgets.back();
  if (labels.size() < horizon) throw InvalidParameter("stream shorter than the largest budget");
  if (tally.budgets.size() != plan.budgets.size()) tally.budgets.resize(plan.budgets.size());
  ++tally.reps;

  // Distinct-label counts at each budget.
  {
    std::vector<bool> seen;
    std::uint64_t distinct = 0;
    std::size_t b = 0;
    for (std::uint64_t t = 0; t < horizon; ++t) {
      const auto idx = labels[t].index();
      if (idx >= seen.size()) seen.resize(idx + 1, false);
      if (!seen[idx]) {
        seen[idx] = true;
        ++distinct;
      }
      while (b < plan.budgets.size() && plan.budgets[b] == t + 1) tally.budgets[b++].k_sum += distinct;
    }
  }

  std::optional<std::uint64_t> tau;
  Diagnostics diag;
  switch (plan.method) {
    case Method::cite: {
      CiteCertifier cert(base);
      for (std::uint64_t t = 0; t < horizon && !cert.certified(); ++t) cert.step(labels[t]);
      tau = cert.tau();
      diag = cert.diagnostics();
      break;
    }
    case Method::wcite: {
      if (weights.size() < horizon) throw InvalidParameter("weight stream shorter than the largest budget");
      WCiteCertifier cert(base);
      for (std::uint64_t t = 0; t < horizon && !cert.certified(); ++t) cert.step({labels[t], weights[t]});
      tau = cert.tau();
      diag = cert.diagnostics();
      break;
    }
    case Method::mmc: {
      MmcCertifier cert(plan.options.epsilon);
      for (std::uint64_t t = 0; t < horizon && !cert.certified(); ++t) cert.step(labels[t]);
      if (cert.certified() && cert.certified_leader() == plan.target) tau = cert.tau();
      break;
    }
    case Method::bonferroni: {
      CountTable counts(plan.target);
      std::size_t b = 0;
      for (std::uint64_t t = 0; t < horizon; ++t) {
        counts.observe(labels[t]);
        while (b < plan.budgets.size() && plan.budgets[b] == t + 1) {
          if (bonferroni_verdict(counts, plan.target, plan.options.epsilon).certified) {
            ++tally.budgets[b].certified;
            tally.budgets[b].tau_sum += plan.budgets[b];
          }
          ++b;
        }
      }
      return;
    }
  }

  for (std::size_t b = 0; b < plan.budgets.size(); ++b) {
    const std::uint64_t n = plan.budgets[b];
    auto& slot = tally.budgets[b];
    if (tau && *tau <= n) {
      ++slot.certified;
      slot.tau_sum += *tau;
    }
    if (diag.tau_pw && *diag.tau_pw <= n) {
      ++slot.pw_count;
      slot.pw_sum += *diag.tau_pw;
    }
    if (diag.tau_lu && *diag.tau_lu <= n) {
      ++slot.lu_count;
      slot.lu_sum += *diag.tau_lu;
    }
  }
}

TrialTally run_replicates(const TrialPlan& plan, const StreamFn& stream) {
  validate_budgets(plan.budgets);
  if (plan.reps == 0) throw ConfigError("reps must be at least 1");
  const CertifierConfig base = base_config(plan);
  const bool with_weights = plan.method == Method::wcite;
  const std::size_t horizon = plan.budgets.back();

  auto work = [&](std::uint64_t begin, std::uint64_t end, TrialTally& out) {
    out.budgets.assign(plan.budgets.size(), {});
    std::vector<Label> labels;
    std::vector<double> weights;
    for (std::uint64_t k = begin; k < end; ++k) {
      stream(k, horizon, with_weights, labels, weights);
      run_one(plan, labels, weights, base, out);
    }
  };

  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(plan.options.threads, 1, plan.reps));
  std::vector<TrialTally> parts(threads);
  if (threads == 1) {
    work(0, plan.reps, parts[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (plan.reps + threads - 1) / threads;
    for (unsigned i = 0; i < threads; ++i) {
      const std::uint64_t begin = std::min<std::uint64_t>(plan.reps, i * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(plan.reps, begin + chunk);
      pool.emplace_back(work, begin, end, std::ref(parts[i]));
    }
    for (auto& th : pool) th.join();
  }
  TrialTally total;
  total.budgets.assign(plan.budgets.size(), {});
  for (const auto& part : parts) total.merge(part);
  return total;
}

std::vector<TrialReport> summarize(const TrialTally& tally, const TrialPlan& plan,
                                   std::string setting, std::uint64_t seed, bool with_k) {
  std::vector<TrialReport> reports;
  const double reps = static_cast<double>(tally.reps);
  for (std::size_t b = 0; b < plan.budgets.size(); ++b) {
    const auto& slot = tally.budgets[b];
    TrialReport r;
    r.setting = setting;
    r.method = plan.method;
    r.budget = plan.budgets[b];
    r.rate = static_cast<double>(slot.certified) / reps;
    r.stderr_rate = std::sqrt(r.rate * (1.0 - r.rate) / reps);
    r.tau_mean = mean_or_nan(slot.tau_sum, slot.certified);
    r.tau_pw_mean = mean_or_nan(slot.pw_sum, slot.pw_count);
    r.tau_lu_mean = mean_or_nan(slot.lu_sum, slot.lu_count);
    r.reps = tally.reps;
    r.seed = seed;
    if (with_k) r.k_mean = static_cast<double>(slot.k_sum) / reps;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<TrialReport> run_trials(const Distribution& dist, std::string setting, Method method,
                                    Label target, Case trial_case,
                                    std::vector<std::uint64_t> budgets, std::uint64_t reps,
                                    std::uint64_t seed, const TrialOptions& options) {
  TrialPlan plan{method, target, std::move(budgets), reps, options};
  const RankWeightSampler sampler(options.gamma, dist);
  const StreamFn stream = [&](std::uint64_t k, std::size_t length, bool with_weights,
                              std::vector<Label>& labels, std::vector<double>& weights) {
    Rng label_rng(child_seed(seed, 2 * k));
    labels.resize(length);
    for (auto& x : labels) x = dist.sample(label_rng);
    weights.clear();
    if (!with_weights) return;
    Rng weight_rng(child_seed(seed, 2 * k + 1));
    weights.resize(length);
    for (std::size_t i = 0; i < length; ++i) weights[i] = sampler.sample(labels[i], weight_rng);
  };
  auto reports = summarize(run_replicates(plan, stream), plan, std::move(setting), seed, false);
  for (auto& r : reports) r.trial_case = trial_case;
  return reports;
}

std::vector<TrialReport> run_trials(const SettingSpec& spec, Method method, Case trial_case,
                                    std::vector<std::uint64_t> budgets, std::uint64_t reps,
                                    std::uint64_t seed, const TrialOptions& options) {
  const Distribution dist = build_setting(spec);
  const Label target(trial_case == Case::A ? 0 : 1);
  if (!(dist.mass(target) > 0.0)) throw ConfigError("setting has no runner-up for case B");
  return run_trials(dist, std::to_string(spec.id), method, target, trial_case, std::move(budgets),
                    reps, seed, options);
}

Distribution sweep_distribution(const SweepPoint& point) {
  const double cap = point.p_r - point.delta;
  if (!(point.p_r > 0.0 && point.p_r < 1.0 && point.delta > 0.0 && cap > 0.0)) {
    throw ConfigError("sweep point needs 0 < delta < p_r < 1");
  }
  const double rest = 1.0 - point.p_r - cap;
  if (rest < -kSumTolerance) throw ConfigError("p_r and runner-up mass exceed 1");
  SettingSpec spec;
  spec.p_r = point.p_r;
  spec.delta = point.delta;
  spec.tail = TailKind::uniform;
  spec.tail_labels = rest > kSumTolerance
                         ? static_cast<std::uint32_t>(std::max(100.0, std::ceil(rest / cap)))
                         : 0;
  return build_setting(spec);
}

std::vector<SweepRow> bottleneck_sweep(std::span<const SweepPoint> points, std::uint64_t reps,
                                       std::uint64_t seed, std::uint64_t horizon,
                                       const TrialOptions& options) {
  if (reps == 0) throw ConfigError("reps must be at least 1");
  if (horizon == 0) throw ConfigError("horizon must be positive");
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Distribution dist = sweep_distribution(points[i]);
    auto config = CertifierConfig::unique_mode(Label(0), options.epsilon);
    config.pairwise_grid = geometric_pairwise_grid(options.pairwise_delta0);
    config.evaluation = Evaluation::decision_only;
    config.unseen_table = std::make_shared<UnseenBoundTable>(config.budget.alpha_u(), horizon);

    const std::uint64_t point_seed = child_seed(seed, i);
    std::uint64_t pw_sum = 0, pw_count = 0, lu_sum = 0, lu_count = 0;
    for (std::uint64_t k = 0; k < reps; ++k) {
      Rng rng(child_seed(point_seed, k));
      CiteCertifier cert(config);
      for (std::uint64_t t = 0; t < horizon; ++t) {
        cert.step(dist.sample(rng));
        const auto d = cert.diagnostics();
        if (d.tau_pw_evidence && d.tau_lu) break;
      }
      const auto d = cert.diagnostics();
      if (d.tau_pw_evidence) {
        ++pw_count;
        pw_sum += *d.tau_pw_evidence;
      }
      if (d.tau_lu) {
        ++lu_count;
        lu_sum += *d.tau_lu;
      }
    }
    rows.push_back({points[i].p_r, points[i].delta, mean_or_nan(pw_sum, pw_count),
                    mean_or_nan(lu_sum, lu_count), pw_count, lu_count, reps});
  }
  return rows;
}

void write_reports_csv(std::ostream& out, std::span<const TrialReport> reports, bool with_k) {
  out << "setting,method,case,N,rate,stderr,tau_mean,tau_pw_mean,tau_lu_mean,reps,seed";
  if (with_k) out << ",K_mean";
  out << '\n';
  for (const auto& r : reports) {
    out << r.setting << ',' << to_string(r.method) << ',' << to_string(r.trial_case) << ','
        << r.budget << ',' << format_number(r.rate, "%.6f") << ','
        << format_number(r.stderr_rate, "%.6f") << ',' << format_number(r.tau_mean, "%.3f") << ','
        << format_number(r.tau_pw_mean, "%.3f") << ',' << format_number(r.tau_lu_mean, "%.3f")
        << ',' << r.reps << ',' << r.seed;
    if (with_k) out << ',' << format_number(r.k_mean.value_or(kNaN), "%.3f");
    out << '\n';
  }
}

nlohmann::json reports_to_json(std::span<const TrialReport> reports, bool with_k) {
  auto rows = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json row = {
        {"setting", r.setting},
        {"method", to_string(r.method)},
        {"case", to_string(r.trial_case)},
        {"N", r.budget},
        {"rate", json_number(r.rate)},
        {"stderr", json_number(r.stderr_rate)},
        {"tau_mean", json_number(r.tau_mean)},
        {"tau_pw_mean", json_number(r.tau_pw_mean)},
        {"tau_lu_mean", json_number(r.tau_lu_mean)},
        {"reps", r.reps},
        {"seed", r.seed},
    };
    if (with_k) row["K_mean"] = json_number(r.k_mean.value_or(kNaN));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "p_r,delta,tau_pw_mean,tau_lu_mean,tau_lu_times_p_r,pw_crossed,lu_crossed,reps\n";
  for (const auto& r : rows) {
    out << format_number(r.p_r, "%.6g") << ',' << format_number(r.delta, "%.6g") << ','
        << format_number(r.tau_pw_mean, "%.3f") << ',' << format_number(r.tau_lu_mean, "%.3f")
        << ',' << format_number(r.tau_lu_mean * r.p_r, "%.3f") << ',' << r.pw_crossed << ','
        << r.lu_crossed << ',' << r.reps << '\n';
  }
}

nlohmann::json sweep_to_json(std::span<const SweepRow> rows) {
  auto out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"p_r", r.p_r},
                   {"delta", r.delta},
                   {"tau_pw_mean", json_number(r.tau_pw_mean)},
                   {"tau_lu_mean", json_number(r.tau_lu_mean)},
                   {"tau_lu_times_p_r", json_number(r.tau_lu_mean * r.p_r)},
                   {"pw_crossed", r.pw_crossed},
                   {"lu_crossed", r.lu_crossed},
                   {"reps", r.reps}});
  }
  return out;
}

}  // namespace modecert
