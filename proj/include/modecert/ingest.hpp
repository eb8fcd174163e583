#pragma once

// Answer pools read from line-delimited JSON and the bootstrap streams drawn
// from them.
//
// One record per line:
//   {"problem_id": "<string>", "answer": "<string>", "weight": <number in [0,1]>}
// weight is optional but must appear on every record of a pool or on none.
// Answers are compared as exact strings. Blank lines are ignored.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modecert/core.hpp"
#include "modecert/simharness.hpp"
#include "modecert/weighted.hpp"

namespace modecert {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnswerPool {
  std::string problem_id;
  LabelTable labels;
  std::vector<Label> answers;
  /// Empty for unweighted pools, otherwise parallel to answers.
  std::vector<double> weights;

  std::size_t size() const { return answers.size(); }
  bool weighted() const { return !weights.empty(); }
};

/// Reads every pool in the stream, in first-appearance order of problem_id.
/// source names the input in error messages.
std::vector<AnswerPool> parse_pools(std::istream& in, const std::string& source);
std::vector<AnswerPool> load_pools(const std::filesystem::path& path);
/// Like load_pools but the file must hold exactly one problem.
AnswerPool load_pool(const std::filesystem::path& path);

/// n uniform draws with replacement, Rng seeded with seed. Weight is 1 for
/// unweighted pools.
std::vector<WeightedObservation> bootstrap_replicate(const AnswerPool& pool, std::uint64_t n,
                                                     std::uint64_t seed);

struct PoolSummary {
  Label mode;
  std::optional<Label> runner_up;
  /// Another answer shares the mode's count; the first-seen one was chosen.
  bool mode_tie = false;
};

PoolSummary summarize_pool(const AnswerPool& pool);

struct PoolReport {
  std::vector<TrialReport> rows;
  Label target;
  bool mode_tie = false;
};

/// Bootstrap trials on a pool. Case A targets the pool mode and Case B its
/// runner-up; replicate k draws one stream of max(budgets) with seed
/// child_seed(seed, k). Throws ConfigError for Case B without a runner-up.
PoolReport pool_report(const AnswerPool& pool, const std::vector<Method>& methods,
                       std::vector<std::uint64_t> budgets, std::uint64_t reps, Case trial_case,
                       std::uint64_t seed, const TrialOptions& options = {});

}  // namespace modecert
