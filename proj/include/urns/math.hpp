#pragma once

// Scalar special functions used throughout the library: regularized
// incomplete gamma/beta (Poisson and binomial tails), Riemann zeta with
// Euler-Maclaurin tails, normal/Kolmogorov distributions, and a generic
// adaptive Simpson integrator.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace urns {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

namespace detail {

// Lower regularized incomplete gamma P(a,x) by series expansion (x < a+1).
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a,x) by continued fraction (x >= a+1).
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 2000; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h;
}

} // namespace detail

/// Lower regularized incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_p: a>0, x>=0 required");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

/// Upper regularized incomplete gamma Q(a,x) = 1 - P(a,x).
inline double gamma_q(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_q: a>0, x>=0 required");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

/// Regularized incomplete beta I_x(a,b).
inline double beta_inc(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::domain_error("beta_inc: a,b > 0 required");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// P(Poisson(lambda) = k), stable in log space.
inline double poisson_pmf(std::int64_t k, double lambda) {
    if (k < 0 || lambda < 0.0) return 0.0;
    if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(k) * std::log(lambda) - lambda -
                    std::lgamma(static_cast<double>(k) + 1.0));
}

/// P(Poisson(lambda) >= k).  Equals P(k, lambda) for k >= 1.
inline double poisson_sf(std::int64_t k, double lambda) {
    if (k <= 0) return 1.0;
    if (lambda <= 0.0) return 0.0;
    // Direct summation when the mean is tiny: one or two terms dominate.
    // P(<k) = e^{-lambda} (1 + r) with r = sum_{1<=j<k} lambda^j/j! kept
    // separate so log1p preserves relative accuracy.
    if (lambda < 1e-4 && k <= 4) {
        double term = 1.0, r = 0.0;
        for (std::int64_t j = 1; j < k; ++j) {
            term *= lambda / static_cast<double>(j);
            r += term;
        }
        double sf = -std::expm1(-lambda + std::log1p(r));
        return sf > 0.0 ? sf : 0.0;
    }
    return gamma_p(static_cast<double>(k), lambda);
}

/// P(Poisson(lambda) < k) = 1 - poisson_sf.
inline double poisson_cdf_below(std::int64_t k, double lambda) {
    if (k <= 0) return 0.0;
    if (lambda <= 0.0) return 1.0;
    return gamma_q(static_cast<double>(k), lambda);
}

/// P(Binomial(m, p) >= k).
inline double binom_sf(std::int64_t m, double p, std::int64_t k) {
    if (k <= 0) return 1.0;
    if (m < k || p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    if (k == 1) return -std::expm1(static_cast<double>(m) * std::log1p(-p));
    return beta_inc(static_cast<double>(k), static_cast<double>(m - k + 1), p);
}

/// Exact binomial coefficient for n <= 62, else via lgamma.
inline double binom_coeff(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    if (n <= 62) {
        std::uint64_t r = 1;
        for (std::int64_t j = 1; j <= k; ++j)
            r = r * static_cast<std::uint64_t>(n - k + j) / static_cast<std::uint64_t>(j);
        return static_cast<double>(r);
    }
    return std::exp(std::lgamma(static_cast<double>(n) + 1.0) -
                    std::lgamma(static_cast<double>(k) + 1.0) -
                    std::lgamma(static_cast<double>(n - k) + 1.0));
}

/// sum_{i>N} i^{-s} for s > 1, Euler-Maclaurin from a = N+1.
inline double zeta_tail(double s, std::int64_t N) {
    if (s <= 1.0) throw std::domain_error("zeta_tail: s > 1 required");
    double a = static_cast<double>(N) + 1.0;
    double la = std::log(a);
    if (s * la > 745.0) return 0.0; // underflows
    double inv = 1.0 / a;
    double ams = std::exp(-s * la); // a^{-s}
    double v = ams * a / (s - 1.0) + 0.5 * ams;
    double t1 = s * inv;
    v += ams * t1 / 12.0;
    double t3 = t1 * (s + 1.0) * (s + 2.0) * inv * inv;
    v -= ams * t3 / 720.0;
    double t5 = t3 * (s + 3.0) * (s + 4.0) * inv * inv;
    v += ams * t5 / 30240.0;
    double t7 = t5 * (s + 5.0) * (s + 6.0) * inv * inv;
    v -= ams * t7 / 1209600.0;
    return v;
}

/// Riemann zeta(s) for s > 1.
inline double zeta(double s) {
    if (s <= 1.0) throw std::domain_error("zeta: s > 1 required");
    const std::int64_t N = 128;
    double sum = 0.0;
    for (std::int64_t i = N; i >= 1; --i)
        sum += std::pow(static_cast<double>(i), -s);
    return sum + zeta_tail(s, N);
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Kolmogorov distribution tail Q(x) = P(K > x) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 x^2}.
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * x * x);
        s += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

/// One-sample KS p-value with the Stephens small-sample correction.
inline double ks_p_value(double d, std::int64_t n) {
    double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn));
}

struct QuadratureResult {
    double value = 0.0;
    double est_abs_error = 0.0;
    long evals = 0;
    bool converged = true;
};

namespace detail {

template <class F>
void simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                 double fm, double whole, double tol, int depth,
                 QuadratureResult& out, long max_evals) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    out.evals += 2;
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || out.evals > max_evals) {
        out.value += left + right + delta / 15.0;
        out.est_abs_error += std::fabs(delta) / 15.0;
        if (std::fabs(delta) / 15.0 > tol) out.converged = false;
        return;
    }
    if (std::fabs(delta) <= 15.0 * tol) {
        out.value += left + right + delta / 15.0;
        out.est_abs_error += std::fabs(delta) / 15.0;
        return;
    }
    simpson_rec(f, a, fa, m, fm, lm, flm, left, tol * 0.5, depth - 1, out, max_evals);
    simpson_rec(f, m, fm, b, fb, rm, frm, right, tol * 0.5, depth - 1, out, max_evals);
}

} // namespace detail

/// Adaptive Simpson quadrature of f over [a,b] with absolute tolerance tol.
template <class F>
QuadratureResult adaptive_simpson(const F& f, double a, double b, double tol,
                                  long max_evals = 200000) {
    QuadratureResult out;
    if (!(a < b)) return out;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    out.evals = 3;
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48, out, max_evals);
    return out;
}

} // namespace urns
