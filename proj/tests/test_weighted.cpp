#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "modecert/eprocess.hpp"
#include "modecert/weighted.hpp"
#include "oracles.hpp"

using namespace modecert;

namespace {

const Label r(0), a(1), b(2);

struct Draw {
  Label label;
  double weight;
};

std::vector<Draw> random_weighted(std::mt19937_64& rng, std::vector<double> masses, std::size_t n,
                                  std::vector<double> weight_levels) {
  std::discrete_distribution<std::uint32_t> d(masses.begin(), masses.end());
  std::uniform_int_distribution<std::size_t> w(0, weight_levels.size() - 1);
  std::vector<Draw> out(n);
  for (auto& x : out) x = {Label(d(rng)), weight_levels[w(rng)]};
  return out;
}

}  // namespace

TEST_SUITE("weighted") {
  TEST_CASE("weighted LCB factor examples") {
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    c.step({a, 0.7});
    c.step({b, 0.2});
    // No target hits: t·log(1−λq).
    CHECK(*c.weighted_lcb_log(0.25, 0.5) == doctest::Approx(2 * std::log1p(-0.125)));
    CHECK_FALSE(c.weighted_lcb_log(0.5, 2.0).has_value());

    WCiteCertifier h(CertifierConfig::unique_mode(r));
    h.step({r, 0.5});
    h.step({r, 0.5});
    CHECK(*h.weighted_lcb_log(0.25, 1.0 / 16) == doctest::Approx(0.031010).epsilon(1e-4));
    CHECK(h.target_weights().size() == 1);
    CHECK(h.target_weights()[0].second == 2);

    WCiteCertifier one(CertifierConfig::unique_mode(r));
    one.step({r, 1.0});
    CHECK(*one.weighted_lcb_log(0.3, 0.5) == doctest::Approx(std::log1p(0.5 * 0.7)));
  }

  TEST_CASE("weighted mean bookkeeping") {
    std::mt19937_64 rng(71);
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    double sum = 0.0;
    std::uint64_t t = 0;
    for (const auto& d : random_weighted(rng, {0.3, 0.4, 0.3}, 200, {0.1, 0.5, 0.9, 1.0})) {
      c.step({d.label, d.weight});
      ++t;
      if (d.label == r) sum += d.weight;
      if (c.certified()) break;
      REQUIRE(c.weighted_mean() == doctest::Approx(sum / t).epsilon(1e-14));
    }
  }

  TEST_CASE("invalid weights") {
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    CHECK_THROWS_AS(c.step({r, 1.2}), InvalidObservation);
    CHECK_THROWS_AS(c.step({r, -0.1}), InvalidObservation);
    CHECK_THROWS_AS(c.step({r, std::nan("")}), InvalidObservation);
    CHECK_THROWS_AS(WCiteCertifier(CertifierConfig::top_k({r, a})), ConfigError);
  }

  TEST_CASE("zero weights never certify") {
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    for (int i = 0; i < 3000; ++i) {
      const auto& rec = c.step({i % 3 == 0 ? a : r, 0.0});
      REQUIRE_FALSE(rec.certified);
    }
    CHECK(c.weighted_lower_conf_bound() == 0.0);
  }

  TEST_CASE("unit weights reproduce CITE exactly") {
    std::mt19937_64 rng(73);
    for (int rep = 0; rep < 200; ++rep) {
      const auto draws = random_weighted(rng, {0.4, 0.3, 0.2, 0.1}, 300, {1.0});
      CiteCertifier u(CertifierConfig::unique_mode(r));
      WCiteCertifier w(CertifierConfig::unique_mode(r));
      for (const auto& d : draws) {
        const auto ru = u.step(d.label);
        const auto rw = w.step({d.label, 1.0});
        REQUIRE(ru.certified == rw.certified);
        REQUIRE(ru.pw_log_e == rw.pw_log_e);
        REQUIRE(ru.lcb == rw.lcb);
        REQUIRE(ru.unseen == rw.unseen);
      }
      REQUIRE(u.tau() == w.tau());
    }
  }

  TEST_CASE("pairwise value against the raw-weight oracle") {
    std::mt19937_64 rng(79);
    const auto g = oracle::pairwise_grid(0.25);
    for (int rep = 0; rep < 50; ++rep) {
      WCiteCertifier c(CertifierConfig::unique_mode(r));
      std::map<Label, std::vector<double>> weights;
      for (const auto& d : random_weighted(rng, {0.3, 0.35, 0.35}, 150, {0.05, 0.3, 0.77, 1.0})) {
        c.step({d.label, d.weight});
        weights[d.label].push_back(d.weight);
        if (c.certified()) break;
      }
      for (Label x : {a, b}) {
        const auto expect = oracle::weighted_pairwise_mixture(g, weights[r], weights[x]);
        REQUIRE(c.pairwise_log_e(x) == doctest::Approx(static_cast<double>(expect)).epsilon(1e-12));
      }
      const auto lg = oracle::lcb_grid();
      const auto expect = oracle::weighted_lcb(lg, weights[r], c.table().t(), std::log(60.0L));
      REQUIRE(std::abs(c.weighted_lower_conf_bound() - static_cast<double>(expect)) <= 1.1e-9);
    }
    WCiteCertifier fresh(CertifierConfig::unique_mode(r));
    CHECK(fresh.pairwise_log_e(b) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(fresh.pairwise_log_e(r), InvalidParameter);
  }

  TEST_CASE("the binding competitor need not be the count runner-up") {
    // a has more hits but tiny weights; b has fewer, heavy hits.
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    for (int i = 0; i < 12; ++i) c.step({a, 0.05});
    for (int i = 0; i < 10; ++i) c.step({b, 1.0});
    for (int i = 0; i < 30; ++i) c.step({r, 1.0});
    REQUIRE_FALSE(c.certified());
    REQUIRE(c.table().runner_up() == a);
    CHECK(c.pairwise_log_e(b) < c.pairwise_log_e(a));
    const auto& rec = c.last();
    CHECK(*rec.pw_log_e == c.pairwise_log_e(b));
  }

  TEST_CASE("decision-only evaluation gives identical verdicts") {
    std::mt19937_64 rng(83);
    for (int rep = 0; rep < 200; ++rep) {
      const auto draws = random_weighted(rng, {0.35, 0.3, 0.2, 0.15}, 500, {0.02, 0.4, 0.9, 1.0});
      auto full_cfg = CertifierConfig::unique_mode(r);
      auto lazy_cfg = full_cfg;
      lazy_cfg.evaluation = Evaluation::decision_only;
      WCiteCertifier full(full_cfg), lazy(lazy_cfg);
      for (const auto& d : draws) {
        const bool f = full.step({d.label, d.weight}).certified;
        const bool l = lazy.step({d.label, d.weight}).certified;
        REQUIRE(f == l);
      }
      REQUIRE(full.diagnostics().tau_pw == lazy.diagnostics().tau_pw);
      REQUIRE(full.diagnostics().tau_lu == lazy.diagnostics().tau_lu);
    }
  }

  TEST_CASE("heavier target weights stop no later on a matched trace") {
    std::vector<Label> labels;
    for (int i = 0; i < 400; ++i) labels.push_back(i % 3 == 2 ? a : r);
    CiteCertifier plain(CertifierConfig::unique_mode(r));
    WCiteCertifier weighted(CertifierConfig::unique_mode(r));
    std::vector<double> hit_w, rival_w;
    std::optional<std::size_t> oracle_tau;
    const auto pg = oracle::pairwise_grid(0.25);
    const auto lg = oracle::lcb_grid();
    const long double thr = std::log(60.0L);
    for (std::size_t t = 1; t <= labels.size(); ++t) {
      const Label x = labels[t - 1];
      const double w = x == r ? 0.9 : 0.1;
      plain.step(x);
      weighted.step({x, w});
      (x == r ? hit_w : rival_w).push_back(w);
      if (!oracle_tau) {
        const bool pw = oracle::weighted_pairwise_mixture(pg, hit_w, rival_w) >= thr || rival_w.empty();
        const bool lu = oracle::weighted_lcb(lg, hit_w, t, thr) > oracle::unseen(t, 0.05L / 3);
        if (pw && lu) oracle_tau = t;
      }
    }
    REQUIRE(weighted.certified());
    REQUIRE(plain.certified());
    CHECK(*weighted.tau() <= *plain.tau());
    CHECK(weighted.tau() == oracle_tau);
  }

  TEST_CASE("weighted LCB is nonincreasing in q") {
    std::mt19937_64 rng(89);
    std::uniform_real_distribution<double> u(1e-5, 1.0);
    WCiteCertifier c(CertifierConfig::unique_mode(r));
    for (const auto& d : random_weighted(rng, {0.2, 0.5, 0.3}, 300, {0.1, 0.35, 0.6, 1.0})) c.step({d.label, d.weight});
    for (int i = 0; i < 10000; ++i) {
      double q1 = u(rng), q2 = u(rng);
      if (q1 > q2) std::swap(q1, q2);
      REQUIRE(c.weighted_lcb_mixture_log(q1) >= c.weighted_lcb_mixture_log(q2));
    }
  }
}
