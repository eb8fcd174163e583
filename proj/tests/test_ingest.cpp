#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "modecert/ingest.hpp"

using namespace modecert;

namespace {

std::vector<AnswerPool> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_pools(in, "pool.jsonl");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const IngestError& e) {
    return e.what();
  }
  return "";
}

std::string record(const std::string& id, const std::string& answer) {
  return R"({"problem_id": ")" + id + R"(", "answer": ")" + answer + "\"}\n";
}

AnswerPool make_pool(const std::vector<std::pair<std::string, int>>& answers) {
  std::string text;
  for (const auto& [a, n] : answers) {
    for (int i = 0; i < n; ++i) text += record("p", a);
  }
  return parse(text).at(0);
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("three records") {
    const auto pools = parse(record("p1", "42") + "\n" + record("p1", "41") + record("p1", "42"));
    REQUIRE(pools.size() == 1);
    const auto& p = pools[0];
    CHECK(p.problem_id == "p1");
    CHECK(p.size() == 3);
    CHECK_FALSE(p.weighted());
    CHECK(p.labels.size() == 2);
    CHECK(p.answers[0] == p.answers[2]);
    CHECK(p.labels.name(p.answers[1]) == "41");
    const auto s = summarize_pool(p);
    CHECK(p.labels.name(s.mode) == "42");
    REQUIRE(s.runner_up.has_value());
    CHECK(p.labels.name(*s.runner_up) == "41");
    CHECK_FALSE(s.mode_tie);
  }

  TEST_CASE("several problems keep first-appearance order") {
    const auto pools = parse(record("b", "x") + record("a", "y") + record("b", "z"));
    REQUIRE(pools.size() == 2);
    CHECK(pools[0].problem_id == "b");
    CHECK(pools[0].size() == 2);
    CHECK(pools[1].problem_id == "a");
  }

  TEST_CASE("weights") {
    const auto pools = parse(R"({"problem_id":"p","answer":"a","weight":0.5})" "\n"
                             R"({"problem_id":"p","answer":"b","weight":1})" "\n");
    REQUIRE(pools[0].weighted());
    CHECK(pools[0].weights == std::vector<double>{0.5, 1.0});
  }

  TEST_CASE("errors carry the line number") {
    const std::string good = record("p", "a");
    CHECK(error_of(good + R"({"problem_id":"p","answer":"b","weight":1.2})" "\n") ==
          "pool.jsonl:2: weight outside [0,1]");
    CHECK(error_of(good + R"({"problem_id":"p","answer":"b","weight":0.5})" "\n").find("pool.jsonl:2:") == 0);
    CHECK(error_of(good + good + "{not json\n").find("pool.jsonl:3: malformed JSON") == 0);
    CHECK(error_of("[1,2]\n").find("pool.jsonl:1:") == 0);
    CHECK(error_of(R"({"answer":"a"})" "\n").find("problem_id") != std::string::npos);
    CHECK(error_of(R"({"problem_id":"p","answer":7})" "\n").find("answer") != std::string::npos);
    CHECK(error_of(R"({"problem_id":"p","answer":"a","weight":"1"})" "\n").find("number") != std::string::npos);
    CHECK(error_of("") == "pool.jsonl: no records");
    CHECK(error_of("\n  \n") == "pool.jsonl: no records");
    CHECK_THROWS_AS(load_pools("/nonexistent/pool.jsonl"), IngestError);
  }

  TEST_CASE("counts match a direct tally") {
    std::mt19937_64 rng(41);
    std::string text;
    std::map<std::string, int> expected;
    for (int i = 0; i < 1000; ++i) {
      const std::string a = "ans" + std::to_string(rng() % 37);
      ++expected[a];
      text += record("p", a);
    }
    const auto p = parse(text).at(0);
    std::map<std::string, int> got;
    for (Label a : p.answers) ++got[p.labels.name(a)];
    CHECK(got == expected);
    int best = 0;
    for (const auto& [a, n] : expected) best = std::max(best, n);
    CHECK(expected[p.labels.name(summarize_pool(p).mode)] == best);
  }

  TEST_CASE("ties are flagged") {
    const auto p = make_pool({{"x", 3}, {"y", 3}, {"z", 1}});
    const auto s = summarize_pool(p);
    CHECK(s.mode_tie);
    CHECK(p.labels.name(s.mode) == "x");
    CHECK_FALSE(summarize_pool(make_pool({{"x", 4}})).runner_up.has_value());
  }
}

TEST_SUITE("bootstrap") {
  TEST_CASE("single record") {
    const auto p = make_pool({{"only", 1}});
    const auto draws = bootstrap_replicate(p, 50, 3);
    CHECK(draws.size() == 50);
    for (const auto& d : draws) {
      CHECK(d.label == p.answers[0]);
      CHECK(d.weight == 1.0);
    }
    CHECK_THROWS_AS(bootstrap_replicate(p, 0, 3), InvalidParameter);
  }

  TEST_CASE("deterministic in the seed") {
    const auto p = make_pool({{"a", 5}, {"b", 3}, {"c", 2}});
    const auto x = bootstrap_replicate(p, 200, 11);
    const auto y = bootstrap_replicate(p, 200, 11);
    const auto z = bootstrap_replicate(p, 200, 12);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      same = same && x[i].label == y[i].label;
      differs = differs || x[i].label != z[i].label;
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("marginals follow the empirical distribution") {
    const auto p = make_pool({{"a", 5}, {"b", 3}, {"c", 2}});
    const std::uint64_t reps = 200, n = 500;
    std::map<std::string, double> freq;
    for (std::uint64_t k = 0; k < reps; ++k) {
      for (const auto& d : bootstrap_replicate(p, n, child_seed(5, k))) freq[p.labels.name(d.label)] += 1;
    }
    const double total = double(reps * n);
    const double tol = 4.0 / std::sqrt(total);
    CHECK(std::abs(freq["a"] / total - 0.5) <= tol);
    CHECK(std::abs(freq["b"] / total - 0.3) <= tol);
    CHECK(std::abs(freq["c"] / total - 0.2) <= tol);
  }

  TEST_CASE("weights travel with their records") {
    const auto pools = parse(R"({"problem_id":"p","answer":"a","weight":0.25})" "\n"
                             R"({"problem_id":"p","answer":"b","weight":0.75})" "\n");
    for (const auto& d : bootstrap_replicate(pools[0], 100, 2)) {
      CHECK(d.weight == (pools[0].labels.name(d.label) == "a" ? 0.25 : 0.75));
    }
  }
}

TEST_SUITE("pool reports") {
  TEST_CASE("a concentrated pool certifies quickly") {
    const auto p = make_pool({{"a", 80}, {"b", 10}, {"c", 10}});
    const auto rep = pool_report(p, {Method::cite}, {64, 128}, 100, Case::A, 1);
    REQUIRE(rep.rows.size() == 2);
    CHECK(p.labels.name(rep.target) == "a");
    CHECK(rep.rows[1].rate >= 0.95);
    CHECK(rep.rows[1].tau_mean <= 40.0);
    CHECK(rep.rows[0].setting == "p");
    REQUIRE(rep.rows[0].k_mean.has_value());
    CHECK(*rep.rows[0].k_mean <= 3.0);
  }

  TEST_CASE("case B targets the runner-up") {
    const auto p = make_pool({{"a", 60}, {"b", 30}, {"c", 10}});
    const auto rep = pool_report(p, {Method::cite, Method::wcite}, {128}, 100, Case::B, 1);
    CHECK(p.labels.name(rep.target) == "b");
    REQUIRE(rep.rows.size() == 2);
    for (const auto& r : rep.rows) {
      CHECK(r.trial_case == Case::B);
      CHECK(r.rate <= 0.05);
    }
    CHECK_THROWS_AS(pool_report(make_pool({{"a", 5}}), {Method::cite}, {16}, 10, Case::B, 1), ConfigError);
  }

  TEST_CASE("single replicate and category growth") {
    const auto p = make_pool({{"a", 4}, {"b", 3}, {"c", 2}, {"d", 1}, {"e", 1}, {"f", 1}});
    const auto one = pool_report(p, {Method::cite}, {8}, 1, Case::A, 9);
    CHECK((one.rows[0].rate == 0.0 || one.rows[0].rate == 1.0));
    const auto rep = pool_report(p, {Method::cite}, {2, 8, 32, 128}, 50, Case::A, 9);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(*rep.rows[i].k_mean >= *rep.rows[i - 1].k_mean);
    CHECK(*rep.rows.back().k_mean <= 6.0);
  }
}
