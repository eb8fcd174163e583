#include "modecert/ingest.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace modecert {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw IngestError(source + ":" + std::to_string(line) + ": " + what);
}

struct PoolBuild {
  AnswerPool pool;
  std::optional<bool> has_weights;
};

}  // namespace

std::vector<AnswerPool> parse_pools(std::istream& in, const std::string& source) {
  std::vector<PoolBuild> builds;
  std::unordered_map<std::string, std::size_t> index;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(source, line, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) fail(source, line, "record must be a JSON object");
    const auto id = record.find("problem_id");
    if (id == record.end() || !id->is_string()) fail(source, line, "missing string field problem_id");
    const auto answer = record.find("answer");
    if (answer == record.end() || !answer->is_string()) fail(source, line, "missing string field answer");

    std::optional<double> weight;
    if (const auto w = record.find("weight"); w != record.end() && !w->is_null()) {
      if (!w->is_number()) fail(source, line, "weight must be a number");
      weight = w->get<double>();
      if (!(*weight >= 0.0 && *weight <= 1.0)) fail(source, line, "weight outside [0,1]");
    }

    const auto& key = id->get_ref<const std::string&>();
    auto [it, fresh] = index.try_emplace(key, builds.size());
    if (fresh) {
      builds.emplace_back();
      builds.back().pool.problem_id = key;
    }
    auto& build = builds[it->second];
    if (build.has_weights && *build.has_weights != weight.has_value()) {
      fail(source, line, "weight present on some records of problem '" + key + "' but not others");
    }
    build.has_weights = weight.has_value();
    build.pool.answers.push_back(build.pool.labels.intern(answer->get_ref<const std::string&>()));
    if (weight) build.pool.weights.push_back(*weight);
  }
  if (builds.empty()) throw IngestError(source + ": no records");

  std::vector<AnswerPool> pools;
  pools.reserve(builds.size());
  for (auto& b : builds) pools.push_back(std::move(b.pool));
  return pools;
}

std::vector<AnswerPool> load_pools(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path.string() + ": cannot open");
  return parse_pools(in, path.string());
}

AnswerPool load_pool(const std::filesystem::path& path) {
  auto pools = load_pools(path);
  if (pools.size() != 1) {
    throw IngestError(path.string() + ": expected one problem_id, found " + std::to_string(pools.size()));
  }
  return std::move(pools.front());
}

std::vector<WeightedObservation> bootstrap_replicate(const AnswerPool& pool, std::uint64_t n,
                                                     std::uint64_t seed) {
  if (n == 0) throw InvalidParameter("bootstrap length must be at least 1");
  if (pool.size() == 0) throw InvalidParameter("pool is empty");
  Rng rng(seed);
  std::vector<WeightedObservation> out(n);
  for (auto& obs : out) {
    const auto i = rng.below(pool.size());
    obs.label = pool.answers[i];
    obs.weight = pool.weighted() ? pool.weights[i] : 1.0;
  }
  return out;
}

PoolSummary summarize_pool(const AnswerPool& pool) {
  if (pool.size() == 0) throw InvalidParameter("pool is empty");
  std::vector<std::uint64_t> counts(pool.labels.size(), 0);
  for (Label a : pool.answers) ++counts[a.index()];
  // Label ids follow first appearance, so the lowest index wins ties.
  PoolSummary s;
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  s.mode = Label(best);
  std::optional<std::uint32_t> second;
  for (std::uint32_t i = 0; i < counts.size(); ++i) {
    if (i == best) continue;
    if (!second || counts[i] > counts[*second]) second = i;
  }
  if (second) {
    s.runner_up = Label(*second);
    s.mode_tie = counts[*second] == counts[best];
  }
  return s;
}

PoolReport pool_report(const AnswerPool& pool, const std::vector<Method>& methods,
                       std::vector<std::uint64_t> budgets, std::uint64_t reps, Case trial_case,
                       std::uint64_t seed, const TrialOptions& options) {
  const PoolSummary summary = summarize_pool(pool);
  PoolReport report;
  report.mode_tie = summary.mode_tie;
  if (trial_case == Case::A) {
    report.target = summary.mode;
  } else {
    if (!summary.runner_up) throw ConfigError("pool '" + pool.problem_id + "' has no runner-up answer");
    report.target = *summary.runner_up;
  }

  const StreamFn stream = [&](std::uint64_t k, std::size_t length, bool with_weights,
                              std::vector<Label>& labels, std::vector<double>& weights) {
    const auto draws = bootstrap_replicate(pool, length, child_seed(seed, k));
    labels.resize(length);
    weights.resize(with_weights ? length : 0);
    for (std::size_t i = 0; i < length; ++i) {
      labels[i] = draws[i].label;
      if (with_weights) weights[i] = draws[i].weight;
    }
  };
  for (Method method : methods) {
    TrialPlan plan{method, report.target, budgets, reps, options};
    auto rows = summarize(run_replicates(plan, stream), plan, pool.problem_id, seed, true);
    for (auto& r : rows) {
      r.trial_case = trial_case;
      report.rows.push_back(std::move(r));
    }
  }
  return report;
}

}  // namespace modecert
