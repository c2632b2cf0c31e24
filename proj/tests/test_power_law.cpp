#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "urns/power_law.hpp"

using namespace urns;

namespace {

// Independent oracle for M(t): brute direct sum with Kahan compensation up
// to N terms, plus the elementary bound
//   sum_{i>N} (1 - e^{-t p_i}) <= t*c*N^{1-s}/(s-1).
// Returns the lower bracket and the bound width actually achieved with the
// term budget.
struct Bracket {
    double lo;
    double width;
};

Bracket oracle_mean_occupied(const PowerLawPmf& model, double t,
                             std::int64_t max_terms = 20000000) {
    double s = 1.0 / model.theta();
    double c = model.normalizer();
    std::int64_t N = max_terms;
    double sum = 0.0, comp = 0.0;
    for (std::int64_t i = 1; i <= N; ++i) {
        double term = -std::expm1(-t * c * std::pow(static_cast<double>(i), -s));
        double y = term - comp;
        double tt = sum + y;
        comp = (tt - sum) - y;
        sum = tt;
    }
    double width = t * c * std::pow(static_cast<double>(N), 1.0 - s) / (s - 1.0);
    return {sum, width};
}

} // namespace

TEST_CASE("pmf values and monotonicity") {
    PowerLawPmf model(0.5);
    CHECK(model.pmf(1) == Catch::Approx(0.6079271018540266).epsilon(1e-12));
    CHECK(model.normalizer() == Catch::Approx(1.0 / 1.6449340668482264).epsilon(1e-12));
    for (std::int64_t i = 1; i < 2000; ++i) CHECK(model.pmf(i) >= model.pmf(i + 1));
    CHECK_THROWS_AS(model.pmf(0), std::domain_error);
    CHECK_THROWS_AS(PowerLawPmf(0.0), std::domain_error);
    CHECK_THROWS_AS(PowerLawPmf(1.0), std::domain_error);
}

TEST_CASE("normalization brackets one") {
    PowerLawPmf model(0.5);
    // partial sums plus analytic integral tail bound bracket 1
    const std::int64_t N = 1000000;
    double sum = 0.0, comp = 0.0;
    for (std::int64_t i = 1; i <= N; ++i) {
        double term = model.pmf(i);
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double c = model.normalizer();
    double tail_lo = c / (static_cast<double>(N) + 1.0);       // int_{N+1}^inf c x^-2
    double tail_hi = c / static_cast<double>(N);               // int_{N}^inf  c x^-2
    CHECK(sum + tail_lo <= 1.0 + 1e-10);
    CHECK(sum + tail_hi >= 1.0 - 1e-10);
    // table invariants
    CHECK(model.tail_mass() == Catch::Approx(1.0 - model.cumulative(model.table_cutoff())));
    for (std::int64_t i = 2; i <= 1000; ++i)
        CHECK(model.cumulative(i) > model.cumulative(i - 1));
}

TEST_CASE("alpha closed form and boundaries") {
    PowerLawPmf model(0.5);
    double z2 = 1.6449340668482264;
    CHECK(model.alpha(z2) == 1);             // p_1 = 1/x exactly, boundary included
    CHECK(model.alpha(1.0) == 0);            // x < 1/p_1
    CHECK(model.alpha(4.0 * z2) == 2);       // sqrt(c x) = 2
    CHECK(model.alpha(0.0) == 0);
    CHECK_THROWS_AS(model.alpha(-1.0), std::domain_error);

    for (std::int64_t i = 1; i <= 10000; i += 7) {
        double x = 1.0 / model.pmf(i);
        CHECK(model.alpha(x) >= i);
        CHECK(model.alpha(x * (1.0 - 1e-9)) < i);
    }
}

TEST_CASE("alpha growth is x^theta on the nose") {
    for (double theta : {0.3, 0.7}) {
        PowerLawPmf model(theta);
        for (double x : {10.0, 1e4, 1e8}) {
            double expected = std::pow(model.normalizer() * x, theta);
            CHECK(std::fabs(static_cast<double>(model.alpha(x)) - expected) <= 1.0);
        }
    }
}

TEST_CASE("sampling determinism and frequency") {
    PowerLawPmf model(0.5);
    Engine e1 = make_engine(7, 0, 0), e2 = make_engine(7, 0, 0);
    auto a = model.sample(e1, 1000);
    auto b = model.sample(e2, 1000);
    CHECK(a == b);
    CHECK(model.sample(e1, 0).empty());

    Engine eng = make_engine(8, 0, 0);
    const std::int64_t n = 1000000;
    std::int64_t ones = 0;
    for (std::int64_t i = 0; i < n; ++i) ones += (model.sample(eng) == 1);
    double p1 = model.pmf(1);
    double se = std::sqrt(p1 * (1.0 - p1) / static_cast<double>(n));
    CHECK(std::fabs(static_cast<double>(ones) / n - p1) <= 3.0 * se);
}

TEST_CASE("tail sampler produces the right tail mass and shape") {
    // tiny table forces frequent tail draws through the Pareto rejection path
    PowerLawPmf model(0.7, 64);
    REQUIRE(model.table_cutoff() == 64);
    Engine eng = make_engine(9, 0, 0);
    const std::int64_t n = 400000;
    std::int64_t beyond = 0, first_tail = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        auto v = model.sample(eng);
        beyond += (v > 64);
        first_tail += (v == 65);
    }
    double tm = model.tail_mass();
    double se = std::sqrt(tm * (1.0 - tm) / n);
    CHECK(std::fabs(static_cast<double>(beyond) / n - tm) <= 4.0 * se);
    double p65 = model.pmf(65);
    double se65 = std::sqrt(p65 * (1.0 - p65) / n);
    CHECK(std::fabs(static_cast<double>(first_tail) / n - p65) <= 4.0 * se65);
}

TEST_CASE("mean_occupied against the brute-force oracle") {
    PowerLawPmf model(0.5);
    for (double t : {1.0, 100.0, 1e4}) {
        auto br = oracle_mean_occupied(model, t, 4000000);
        double v = model.mean_occupied(t, 1e-9);
        CHECK(v >= br.lo - 1e-9);
        CHECK(v <= br.lo + br.width + 1e-9);
    }
    CHECK(model.mean_occupied(0.0) == 0.0);
    // frozen high-precision reference values (independent mpmath evaluation)
    CHECK(model.mean_occupied(1e5) == Catch::Approx(436.51937223683160).epsilon(1e-10));
    CHECK(model.mean_occupied(1e6) == Catch::Approx(1381.4765978853419).epsilon(1e-10));
}

TEST_CASE("mean_occupied asymptotics, monotonicity, concavity") {
    PowerLawPmf model(0.5);
    double t = 1e6;
    double asym = std::tgamma(0.5) * std::sqrt(model.normalizer() * t);
    CHECK(model.mean_occupied(t) / asym == Catch::Approx(1.0).margin(0.02));

    double prev = model.mean_occupied(0.5);
    for (double x = 1.0; x < 40.0; x += 0.5) {
        double cur = model.mean_occupied(x);
        CHECK(cur > prev);
        prev = cur;
    }
    // concavity: second differences on a grid are nonpositive
    double h = 5.0;
    for (double x = h; x <= 300.0; x += h) {
        double d2 = model.mean_occupied(x + h) - 2.0 * model.mean_occupied(x) +
                    model.mean_occupied(std::max(0.0, x - h));
        CHECK(d2 <= 1e-9);
    }
}

TEST_CASE("mean_at_least and mean_exact identities") {
    PowerLawPmf model(0.5);
    double t = 1e5;
    CHECK(model.mean_at_least_k(t, 1) == Catch::Approx(model.mean_occupied(t)).margin(2e-9));
    for (std::int64_t k : {1LL, 2LL, 3LL, 7LL}) {
        double mk = model.mean_exact_k(t, k, 1e-9);
        double diff = model.mean_at_least_k(t, k, 1e-9) - model.mean_at_least_k(t, k + 1, 1e-9);
        CHECK(mk == Catch::Approx(diff).margin(2e-9));
    }
    CHECK(model.mean_exact_k(0.0, 3) == 0.0);
    CHECK_THROWS_AS(model.mean_at_least_k(10.0, 0), std::domain_error);

    // M_1(t)/M(t) approaches q_1 = theta
    CHECK(model.mean_exact_k(t, 1) / model.mean_occupied(t) ==
          Catch::Approx(0.5).margin(0.015));
}

TEST_CASE("binomial occupancy expectations") {
    PowerLawPmf model(0.5);
    CHECK(model.binomial_mean_at_least(0, 1) == 0.0);
    CHECK(model.binomial_mean_at_least(1, 1) == Catch::Approx(1.0).margin(1e-9));
    // sum_i p_i^2 = zeta(4)/zeta(2)^2 = 2/5
    CHECK(model.binomial_mean_at_least(2, 2) == Catch::Approx(0.4).margin(1e-9));
    CHECK(model.binomial_mean_exact(2, 2) == Catch::Approx(0.4).margin(2e-9));
    // against Poissonized value at matching scale: close but not equal
    double m = 20000;
    CHECK(model.binomial_mean_at_least(static_cast<std::int64_t>(m), 1) ==
          Catch::Approx(model.mean_occupied(m)).margin(1.0));
}

TEST_CASE("karlin-rouault law") {
    CHECK(karlin_rouault(0.5, 1) == Catch::Approx(0.5));
    CHECK(karlin_rouault(0.37, 1) == Catch::Approx(0.37));
    CHECK(karlin_rouault(0.5, 2) == Catch::Approx(0.125));
    CHECK(karlin_rouault(0.5, 4) == Catch::Approx(0.0390625));
    CHECK_THROWS_AS(karlin_rouault(0.5, 0), std::domain_error);
    CHECK_THROWS_AS(karlin_rouault(1.2, 1), std::domain_error);

    // q_100 against the asymptotic theta k^{-theta-1} / Gamma(1-theta)
    double q100 = karlin_rouault(0.5, 100);
    double asym = 0.5 * std::pow(100.0, -1.5) / std::tgamma(0.5);
    CHECK(q100 / asym == Catch::Approx(1.0).margin(0.02));

    auto kr = KarlinRouault::make(0.5, 10000);
    double sum = 0.0;
    double prev = 0.0;
    for (double q : kr.values) {
        CHECK(q > 0.0);
        sum += q;
        CHECK(sum > prev);
        CHECK(sum <= 1.0 + 1e-12);
        prev = sum;
    }
    CHECK(sum >= 0.99);
    CHECK(sum == Catch::Approx(0.9943581746877796).epsilon(1e-10));
    CHECK(kr.values[0] == Catch::Approx(0.5));
}
