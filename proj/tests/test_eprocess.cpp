#include <doctest.h>

#include <cmath>
#include <random>

#include "modecert/eprocess.hpp"
#include "oracles.hpp"

using namespace modecert;

TEST_SUITE("pairwise e-process") {
  TEST_CASE("closed form") {
    CHECK(pairwise_log_e(0.3, 0, 0) == 0.0);
    CHECK(pairwise_log_e(0.5, 2, 1) == doctest::Approx(std::log(1.125)).epsilon(1e-15));
    CHECK(pairwise_log_e(0.5, 0, 3) == doctest::Approx(-2.0794415416798357).epsilon(1e-15));
    CHECK_THROWS_AS(pairwise_log_e(0.0, 1, 1), InvalidParameter);
    CHECK_THROWS_AS(pairwise_log_e(1.0, 1, 1), InvalidParameter);
  }

  TEST_CASE("grid mixtures") {
    const auto one = GridSpec::pairwise({0.5}, {1.0});
    CHECK(mixture_log_e(one, 2, 1) == doctest::Approx(std::log(1.125)).epsilon(1e-15));
    const auto two = GridSpec::pairwise({0.25, 0.5}, {0.5, 0.5});
    CHECK(mixture_log_e(two, 1, 0) == doctest::Approx(0.318453731118535).epsilon(1e-14));
    CHECK(std::abs(mixture_log_e(two, 0, 0)) < 1e-15);
    CHECK_THROWS_AS(mixture_log_e(default_lcb_grid(), 1, 1), InvalidParameter);
  }

  TEST_CASE("default grid against high-precision values") {
    // 40-digit evaluations of log Σ_k (1/5)(1+2^-k)^{n_r}(1−2^-k)^{n_a}, k = 1..5.
    const auto g = default_pairwise_grid();
    CHECK(mixture_log_e(g, 30, 10) == doctest::Approx(3.8992232276370204813).epsilon(1e-13));
    CHECK(mixture_log_e(g, 100, 90) == doctest::Approx(-0.40049702474162833825).epsilon(1e-13));
    CHECK(mixture_log_e(g, 0, 5) == doctest::Approx(-0.75125299816500935559).epsilon(1e-13));
    CHECK(mixture_log_e(g, 7, 0) == doctest::Approx(1.6828369521357424409).epsilon(1e-13));
    CHECK(mixture_log_e(g, 1000, 800) == doctest::Approx(9.4830431051179328406).epsilon(1e-13));
  }

  TEST_CASE("agrees with the long double oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> n(0, 5000);
    for (double delta0 : {1.0, 0.25, 0.01}) {
      const auto g = geometric_pairwise_grid(delta0);
      const auto o = oracle::pairwise_grid(delta0);
      for (int i = 0; i < 500; ++i) {
        const auto nr = n(rng), na = n(rng);
        REQUIRE(std::abs(mixture_log_e(g, nr, na) - static_cast<double>(oracle::pairwise_mixture(o, nr, na))) <
                1e-9 * (1 + std::abs(mixture_log_e(g, nr, na))));
      }
    }
  }

  TEST_CASE("nonincreasing in the competitor count") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> n(0, 3000);
    const auto g = default_pairwise_grid();
    for (int i = 0; i < 10000; ++i) {
      const auto nr = n(rng);
      auto na = n(rng), nb = n(rng);
      if (na < nb) std::swap(na, nb);
      REQUIRE(mixture_log_e(g, nr, na) <= mixture_log_e(g, nr, nb));
      REQUIRE(pairwise_log_e(0.25, nr, na) <= pairwise_log_e(0.25, nr, nb));
    }
  }

  TEST_CASE("oracle bet") {
    CHECK(oracle_lambda(0.6, 0.3) == doctest::Approx(1.0 / 3));
    CHECK(oracle_lambda(0.3, 0.3) == 0.0);
    CHECK(oracle_lambda(0.24, 0.025) == doctest::Approx(0.811320754716981));
    CHECK_THROWS_AS(oracle_lambda(0.3, 0.4), InvalidParameter);
    CHECK_THROWS_AS(oracle_lambda(0.6, 0.0), InvalidParameter);

    // Growth rate ρ(λ) = p_r log(1+λ) + p2 log(1−λ) on a 10^4-point grid.
    for (auto [pr, p2] : {std::pair{0.6, 0.3}, {0.24, 0.025}, {0.35, 0.2}, {0.12, 0.11}}) {
      double best = -1e300, arg = 0.0;
      for (int i = 0; i < 10000; ++i) {
        const double l = i / 10000.0;
        const double rho = pr * std::log1p(l) + p2 * std::log1p(-l);
        if (rho > best) {
          best = rho;
          arg = l;
        }
      }
      CHECK(std::abs(arg - oracle_lambda(pr, p2)) <= 1e-4);
    }
  }

  TEST_CASE("log-sum-exp") {
    CHECK(log_sum_exp({}) == kNegInf);
    const std::vector<double> v{kNegInf, kNegInf};
    CHECK(log_sum_exp(v) == kNegInf);
    const std::vector<double> w{1000.0, 1000.0};
    CHECK(log_sum_exp(w) == doctest::Approx(1000.0 + std::log(2.0)));
    const std::vector<double> x{std::log(0.25), kNegInf, std::log(0.5)};
    CHECK(log_sum_exp(x) == doctest::Approx(std::log(0.75)));
  }
}
