#pragma once

// Limiting Gaussian covariance kernels.
//
// The general kernel is
//   K*(A1,k1,A2,k2) = (theta/Gamma(1-theta)) * Int_0^inf cov(u) u^{-theta-1} du,
// where cov(u) is the covariance of the indicators 1(Pois(u A1) < k1) and
// 1(Pois(u A2) < k2), evaluated through the independent decomposition
// B1 = A1\A2, B2 = A1^A2, B3 = A2\A1.
//
// Quadrature splits at u* = 1/(|A1 u A2| + 1e-9).  On (0, u*] the
// substitution u = w^{1/(1-theta)} removes the u^{-theta} endpoint
// singularity and the covariance is evaluated in complement form
// (differences of small survival probabilities, no cancellation).  On
// [u*, Umax] integration runs in u with the CDF form; Umax is pushed out
// until an indicator-CDF factor drops below 1e-14, which bounds the
// discarded tail.  Both pieces use adaptive Simpson with certified local
// error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "urns/intervals.hpp"
#include "urns/math.hpp"
#include "urns/power_law.hpp"

namespace urns {

enum class KernelMethod { closed_form, quadrature, inclusion_exclusion };

struct KernelValue {
    double value = 0.0;
    KernelMethod method = KernelMethod::closed_form;
    double est_abs_error = 0.0;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("kernel: theta must lie in (0,1)");
}

struct KernelGeometry {
    double b1 = 0.0, b2 = 0.0, b3 = 0.0; // |A1\A2|, |A1^A2|, |A2\A1|
    double a1 = 0.0, a2 = 0.0, uu = 0.0; // |A1|, |A2|, |A1 u A2|
};

inline KernelGeometry kernel_geometry(const IntervalSet& A1, const IntervalSet& A2) {
    KernelGeometry g;
    g.b2 = intersection(A1, A2).measure();
    g.a1 = A1.measure();
    g.a2 = A2.measure();
    g.b1 = std::max(0.0, g.a1 - g.b2);
    g.b3 = std::max(0.0, g.a2 - g.b2);
    g.uu = g.b1 + g.b2 + g.b3;
    return g;
}

// cov in complement form: P(both >= k) - P(>=k1)P(>=k2); all terms small
// near u = 0.
inline double cov_complement(const KernelGeometry& g, std::int64_t k1, std::int64_t k2,
                             double u) {
    std::int64_t m0 = std::max(k1, k2);
    double joint = poisson_sf(m0, u * g.b2);
    for (std::int64_t m = 0; m < m0; ++m)
        joint += poisson_pmf(m, u * g.b2) * poisson_sf(k1 - m, u * g.b1) *
                 poisson_sf(k2 - m, u * g.b3);
    return joint - poisson_sf(k1, u * g.a1) * poisson_sf(k2, u * g.a2);
}

// cov in CDF form: P(both < k) - P(<k1)P(<k2); all terms small for large u.
inline double cov_cdf(const KernelGeometry& g, std::int64_t k1, std::int64_t k2, double u) {
    double joint = 0.0;
    std::int64_t mmax = std::min(k1, k2) - 1;
    for (std::int64_t m = 0; m <= mmax; ++m)
        joint += poisson_pmf(m, u * g.b2) * poisson_cdf_below(k1 - m, u * g.b1) *
                 poisson_cdf_below(k2 - m, u * g.b3);
    return joint - poisson_cdf_below(k1, u * g.a1) * poisson_cdf_below(k2, u * g.a2);
}

} // namespace detail

/// Closed form for k1 = k2 = 1: (|A1|+|A2|)^theta - |A1 u A2|^theta.
inline KernelValue kstar_closed(const IntervalSet& A1, const IntervalSet& A2, double theta) {
    detail::check_theta(theta);
    auto g = detail::kernel_geometry(A1, A2);
    double v = std::pow(g.a1 + g.a2, theta) - std::pow(g.uu, theta);
    return {v, KernelMethod::closed_form, 1e-15};
}

/// General kernel K*(A1,k1,A2,k2) by adaptive quadrature of Eq. above.
inline KernelValue kstar_quadrature(const IntervalSet& A1, std::int64_t k1,
                                    const IntervalSet& A2, std::int64_t k2, double theta,
                                    double tol = 1e-8) {
    detail::check_theta(theta);
    if (k1 < 1 || k2 < 1) throw std::domain_error("kstar_quadrature: k >= 1 required");
    if (!(tol > 0.0)) throw std::domain_error("kstar_quadrature: tol > 0 required");
    auto g = detail::kernel_geometry(A1, A2);
    if (g.a1 <= 0.0 || g.a2 <= 0.0)
        return {0.0, KernelMethod::quadrature, 0.0};

    const double wfac = theta / std::tgamma(1.0 - theta);
    const double ustar = 1.0 / (g.uu + 1e-9);
    const double one_m = 1.0 - theta;

    // cut bound near zero: |cov(u)| <= u * min(|A1|,|A2|)
    double lmin = std::min(g.a1, g.a2);
    double wmin = tol * 0.01 * one_m / (std::max(wfac, 1e-300) * lmin); // = u_min^{1-theta}
    double cut_bound = tol * 0.01;
    double wstar = std::pow(ustar, one_m);
    if (wmin > wstar * 0.5) {
        wmin = wstar * 1e-6;
        cut_bound = wfac * lmin * wmin / one_m;
    }

    auto f_left = [&](double w) {
        if (w <= 0.0) return 0.0;
        double u = std::pow(w, 1.0 / one_m);
        double cov = detail::cov_complement(g, k1, k2, u);
        if (cov == 0.0 || !(std::fabs(cov) > 1e-300)) return 0.0;
        double lf = -std::log(w) / one_m + std::log(std::fabs(cov));
        double v = (wfac / one_m) * std::exp(lf);
        return cov > 0.0 ? v : -v;
    };
    auto r1 = adaptive_simpson(f_left, wmin, wstar, tol * 0.45, 100000);

    // stretch the upper limit until an indicator CDF factor is negligible
    double umax = std::max(ustar, 1.0);
    while (std::min(poisson_cdf_below(k1, umax * g.a1),
                    poisson_cdf_below(k2, umax * g.a2)) >= 1e-14 &&
           umax < 1e12)
        umax *= 2.0;
    auto f_right = [&](double u) {
        return wfac * std::pow(u, -theta - 1.0) * detail::cov_cdf(g, k1, k2, u);
    };
    auto r2 = adaptive_simpson(f_right, ustar, umax, tol * 0.45, 100000);
    double tail_bound = 1e-14 * std::pow(umax, -theta) / std::tgamma(1.0 - theta);

    KernelValue out;
    out.method = KernelMethod::quadrature;
    out.value = r1.value + r2.value;
    out.est_abs_error = r1.est_abs_error + r2.est_abs_error + cut_bound + tail_bound;
    if (out.est_abs_error > tol) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "kstar_quadrature: non-convergent refinement, est error %.3e > tol "
                      "%.3e after %ld evaluations",
                      out.est_abs_error, tol, r1.evals + r2.evals);
        throw QuadratureError(msg);
    }
    return out;
}

/// Exact-count kernel K(A1,i,A2,j) by bilinearity over at-least kernels.
inline KernelValue k_exact(const IntervalSet& A1, std::int64_t i, const IntervalSet& A2,
                           std::int64_t j, double theta, double tol = 1e-8) {
    if (i < 1 || j < 1) throw std::domain_error("k_exact: i,j >= 1 required");
    auto t11 = kstar_quadrature(A1, i, A2, j, theta, tol);
    auto t12 = kstar_quadrature(A1, i, A2, j + 1, theta, tol);
    auto t21 = kstar_quadrature(A1, i + 1, A2, j, theta, tol);
    auto t22 = kstar_quadrature(A1, i + 1, A2, j + 1, theta, tol);
    KernelValue out;
    out.method = KernelMethod::inclusion_exclusion;
    out.value = t11.value - t12.value - t21.value + t22.value;
    out.est_abs_error = t11.est_abs_error + t12.est_abs_error + t21.est_abs_error +
                        t22.est_abs_error;
    return out;
}

/// pi_ij = 1(i=j) q_i - binom(i+j,i) 2^{theta-i-j} q_{i+j}  (Corollary for A1=A2).
inline double pi_value(std::int64_t i, std::int64_t j, double theta) {
    detail::check_theta(theta);
    if (i < 1 || j < 1) throw std::domain_error("pi_value: i,j >= 1 required");
    double v = (i == j) ? karlin_rouault(theta, i) : 0.0;
    double cross;
    if (i + j <= 62) {
        cross = binom_coeff(i + j, i) *
                std::pow(2.0, theta - static_cast<double>(i + j)) *
                karlin_rouault(theta, i + j);
    } else {
        double lg = std::lgamma(static_cast<double>(i + j) + 1.0) -
                    std::lgamma(static_cast<double>(i) + 1.0) -
                    std::lgamma(static_cast<double>(j) + 1.0) +
                    (theta - static_cast<double>(i + j)) * std::log(2.0);
        cross = std::exp(lg) * karlin_rouault(theta, i + j);
    }
    return v - cross;
}

/// Forward process kernel K(s,t) = (s+t)^theta - (s v t)^theta.
inline double forward_kernel(double s, double t, double theta) {
    detail::check_theta(theta);
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
        throw std::domain_error("forward_kernel: s,t in [0,1] required");
    return std::pow(s + t, theta) - std::pow(std::max(s, t), theta);
}

/// Forward-backward cross kernel K'(s,t) = ((s+t)^theta - 1) 1(s+t > 1).
inline double cross_kernel(double s, double t, double theta) {
    detail::check_theta(theta);
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
        throw std::domain_error("cross_kernel: s,t in [0,1] required");
    return (s + t > 1.0) ? std::pow(s + t, theta) - 1.0 : 0.0;
}

/// Covariance kernel of the circular difference field U at two grid points:
/// 4-term combination of closed-form kernels over the circular arcs.
inline double u_field_kernel(double s1, double t1, double s2, double t2, double theta) {
    detail::check_theta(theta);
    auto p = circular_arcs(s1, t1);
    auto q = circular_arcs(s2, t2);
    return kstar_closed(p.forward, q.forward, theta).value -
           kstar_closed(p.forward, q.backward, theta).value -
           kstar_closed(p.backward, q.forward, theta).value +
           kstar_closed(p.backward, q.backward, theta).value;
}

struct QLimitCov {
    double value = 0.0;
    double tail_estimate = 0.0;
    bool tail_warning = false;
};

/// Truncated limit covariance of the weighted statistic:
/// sum_{i,j <= K_max} a_i a_j K(A1,i,A2,j), with a tail estimate from the
/// Karlin-Rouault asymptotics for the weights beyond K_max.
inline QLimitCov q_limit_cov(const std::vector<double>& a, const IntervalSet& A1,
                             const IntervalSet& A2, double theta, std::int64_t K_max,
                             double tail_tol = 1e-6, double quad_tol = 1e-8) {
    detail::check_theta(theta);
    if (K_max < 0) throw std::domain_error("q_limit_cov: K_max >= 0 required");
    QLimitCov out;
    auto K = std::min<std::int64_t>(K_max, static_cast<std::int64_t>(a.size()));
    for (std::int64_t i = 1; i <= K; ++i) {
        if (a[static_cast<std::size_t>(i - 1)] == 0.0) continue;
        for (std::int64_t j = 1; j <= K; ++j) {
            if (a[static_cast<std::size_t>(j - 1)] == 0.0) continue;
            out.value += a[static_cast<std::size_t>(i - 1)] *
                         a[static_cast<std::size_t>(j - 1)] *
                         k_exact(A1, i, A2, j, theta, quad_tol).value;
        }
    }
    // Cauchy-Schwarz bound |K(A,i,B,j)| <= sqrt(pi_ii pi_jj) (|A1||A2|)^(theta/2)
    // with the diagonal bounded via q_k ~ theta k^(-theta-1)/Gamma(1-theta).
    auto pi_diag_bound = [&](std::int64_t i) {
        double qa = theta * std::pow(static_cast<double>(i), -theta - 1.0) /
                    std::tgamma(1.0 - theta);
        double q2a = theta * std::pow(2.0 * static_cast<double>(i), -theta - 1.0) /
                     std::tgamma(1.0 - theta);
        double lg = std::lgamma(2.0 * static_cast<double>(i) + 1.0) -
                    2.0 * std::lgamma(static_cast<double>(i) + 1.0) +
                    (theta - 2.0 * static_cast<double>(i)) * std::log(2.0);
        return qa + std::exp(lg) * q2a;
    };
    double scale = std::pow(A1.measure() * A2.measure(), theta * 0.5);
    double root_sum = 0.0;
    for (std::int64_t i = K + 1; i <= static_cast<std::int64_t>(a.size()); ++i)
        root_sum += std::fabs(a[static_cast<std::size_t>(i - 1)]) *
                    std::sqrt(pi_diag_bound(i));
    double head_root = 0.0;
    for (std::int64_t i = 1; i <= K; ++i)
        head_root += std::fabs(a[static_cast<std::size_t>(i - 1)]) *
                     std::sqrt(pi_diag_bound(i));
    out.tail_estimate = scale * root_sum * (root_sum + 2.0 * head_root);
    out.tail_warning = out.tail_estimate > tail_tol;
    return out;
}

} // namespace urns
