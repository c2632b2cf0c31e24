#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "urns/math.hpp"
#include "urns/rng.hpp"

using namespace urns;

TEST_CASE("zeta matches reference values") {
    CHECK(zeta(2.0) == Catch::Approx(1.6449340668482264).epsilon(1e-14));
    CHECK(zeta(3.0) == Catch::Approx(1.2020569031595943).epsilon(1e-14));
    CHECK(zeta(4.0) == Catch::Approx(1.0823232337111382).epsilon(1e-14));
    CHECK(zeta(1.5) == Catch::Approx(2.6123753486854883).epsilon(1e-13));
    CHECK_THROWS_AS(zeta(1.0), std::domain_error);
}

TEST_CASE("zeta_tail consistent with partial sums") {
    for (double s : {1.2, 2.0, 3.5, 7.0}) {
        double direct = 0.0;
        const long N = 200;
        for (long i = 1; i <= N; ++i) direct += std::pow(double(i), -s);
        // the subtraction zeta - partial cancels to ~1e-16 absolute noise
        CHECK(zeta(s) - direct == Catch::Approx(zeta_tail(s, N)).epsilon(1e-9).margin(1e-15));
    }
    CHECK(zeta_tail(5000.0, 100) == 0.0); // underflow guard
}

TEST_CASE("poisson tail functions agree with direct summation") {
    for (double lam : {1e-8, 0.01, 0.7, 3.0, 25.0, 400.0}) {
        for (long k : {1L, 2L, 5L, 11L}) {
            double direct = 0.0, term = std::exp(-lam);
            for (long j = 0; j < k; ++j) {
                direct += term;
                term *= lam / double(j + 1);
            }
            double below = poisson_cdf_below(k, lam);
            CHECK(below == Catch::Approx(direct).margin(1e-12));
            CHECK(poisson_sf(k, lam) == Catch::Approx(1.0 - direct).margin(1e-12));
        }
    }
    // relative accuracy of tiny survival probabilities
    CHECK(poisson_sf(2, 1e-6) == Catch::Approx(4.9999966666679167e-13).epsilon(1e-6));
    CHECK(poisson_sf(1, 0.0) == 0.0);
    CHECK(poisson_sf(0, 3.0) == 1.0);
}

TEST_CASE("poisson pmf stable") {
    CHECK(poisson_pmf(0, 2.0) == Catch::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(poisson_pmf(300, 300.0) == Catch::Approx(0.023026546149187352).epsilon(1e-12));
    CHECK(poisson_pmf(3, 0.0) == 0.0);
}

TEST_CASE("binomial survival against direct summation") {
    auto direct_sf = [](long m, double p, long k) {
        double s = 0.0;
        for (long j = k; j <= m; ++j)
            s += binom_coeff(m, j) * std::pow(p, double(j)) * std::pow(1.0 - p, double(m - j));
        return s;
    };
    for (long m : {1L, 5L, 30L}) {
        for (double p : {0.01, 0.3, 0.9}) {
            for (long k = 1; k <= m; ++k) {
                CHECK(binom_sf(m, p, k) == Catch::Approx(direct_sf(m, p, k)).margin(1e-12));
            }
        }
    }
    CHECK(binom_sf(10, 0.5, 0) == 1.0);
    CHECK(binom_sf(10, 0.5, 11) == 0.0);
    CHECK(binom_sf(1000000, 1e-9, 1) == Catch::Approx(9.9950016712450858e-4).epsilon(1e-12));
}

TEST_CASE("binom_coeff exact in the integer range") {
    CHECK(binom_coeff(10, 3) == 120.0);
    CHECK(binom_coeff(62, 31) == 465428353255261088.0);
    CHECK(binom_coeff(100, 50) == Catch::Approx(1.0089134454556417e29).epsilon(1e-10));
}

TEST_CASE("normal and kolmogorov distributions") {
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == Catch::Approx(0.975).epsilon(1e-9));
    CHECK(kolmogorov_sf(0.5) == Catch::Approx(0.9639452435740996).epsilon(1e-9));
    CHECK(kolmogorov_sf(1.0) == Catch::Approx(0.26999967167735456).epsilon(1e-9));
    // classic 5% critical point: Q(1.358) ~ 0.05
    CHECK(kolmogorov_sf(1.3581015157406195) == Catch::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("adaptive simpson integrates known functions") {
    auto r1 = adaptive_simpson([](double x) { return std::sin(x); }, 0.0, kPi, 1e-10);
    CHECK(r1.converged);
    CHECK(r1.value == Catch::Approx(2.0).epsilon(1e-10));

    auto r2 = adaptive_simpson([](double x) { return std::exp(-x * x); }, 0.0, 10.0, 1e-11);
    CHECK(r2.value == Catch::Approx(std::sqrt(kPi) / 2.0).epsilon(1e-10));
    CHECK(r2.est_abs_error < 1e-9);

    auto r3 = adaptive_simpson([](double) { return 0.0; }, 0.0, 1.0, 1e-12);
    CHECK(r3.value == 0.0);
}

TEST_CASE("engine derivation is deterministic and stream-separated") {
    auto e1 = make_engine(42, 0, 7);
    auto e2 = make_engine(42, 0, 7);
    auto e3 = make_engine(42, 0, 8);
    CHECK(e1() == e2());
    CHECK(e1() != e3());
    Engine u = make_engine(1, 2, 3);
    for (int i = 0; i < 1000; ++i) {
        double v = uniform01(u);
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("uniform_below unbiased range") {
    Engine eng = make_engine(9, 0, 0);
    for (int i = 0; i < 2000; ++i) {
        auto v = uniform_below(eng, 7);
        REQUIRE(v < 7);
    }
}
