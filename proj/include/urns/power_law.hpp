#pragma once

// The regularly varying urn distribution p_i = c * i^(-1/theta) with
// c = 1/zeta(1/theta), theta in (0,1).  The counting function alpha has
// the closed form floor((c x)^theta), so the regular-variation index is
// exact with constant slowly varying part c^theta.
//
// Occupancy expectations (Poissonized M(t), M_k(t), and the fixed-m
// binomial analogues) are computed as a direct sum over i <= N plus a
// factorial-moment tail: for X ~ Bin(m,p) or Pois(tp),
//     P(X >= k) = sum_{l>=k} (-1)^{l-k} C(l-1,k-1) E[C(X,l)],
//     P(X  = k) = sum_{l>=k} (-1)^{l-k} C(l,k)   E[C(X,l)],
// and summing E[C(X,l)] over i > N reduces to scaled zeta tails.  N is
// chosen so that scale * p_N <= 1/2, which makes the tail series decay
// geometrically; truncation error is certified below eps.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "urns/math.hpp"
#include "urns/rng.hpp"

namespace urns {

/// Karlin-Rouault mass q_k = (-1)^{k+1} binom(theta, k), stable product form.
inline double karlin_rouault(double theta, std::int64_t k) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("karlin_rouault: theta must lie in (0,1)");
    if (k < 1) throw std::domain_error("karlin_rouault: k >= 1 required");
    double v = theta;
    for (std::int64_t j = 1; j < k; ++j)
        v *= (static_cast<double>(j) - theta) / (static_cast<double>(j) + 1.0);
    return v;
}

struct KarlinRouault {
    double theta = 0.0;
    std::vector<double> values; // q_1..q_K

    static KarlinRouault make(double theta, std::int64_t K) {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::domain_error("KarlinRouault: theta must lie in (0,1)");
        KarlinRouault kr;
        kr.theta = theta;
        kr.values.reserve(static_cast<std::size_t>(K));
        double v = theta;
        for (std::int64_t k = 1; k <= K; ++k) {
            kr.values.push_back(v);
            v *= (static_cast<double>(k) - theta) / (static_cast<double>(k) + 1.0);
        }
        return kr;
    }
};

class PowerLawPmf {
public:
    explicit PowerLawPmf(double theta, std::int64_t table_cutoff = 1000000)
        : theta_(theta), s_(1.0 / theta) {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::domain_error("PowerLawPmf: theta must lie in (0,1)");
        if (table_cutoff < 1)
            throw std::domain_error("PowerLawPmf: table_cutoff >= 1 required");
        norm_ = 1.0 / zeta(s_);

        // Shrink the table where increments would fall below double
        // resolution; the Pareto tail sampler covers the remainder exactly.
        double imax = std::pow(norm_ / 8.8e-16, theta_);
        if (imax < static_cast<double>(table_cutoff))
            table_cutoff = std::max<std::int64_t>(1, static_cast<std::int64_t>(imax));
        table_cutoff_ = table_cutoff;

        cum_.resize(static_cast<std::size_t>(table_cutoff_));
        double sum = 0.0, comp = 0.0;
        for (std::int64_t i = 1; i <= table_cutoff_; ++i) {
            double term = norm_ * std::pow(static_cast<double>(i), -s_);
            double y = term - comp;
            double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            cum_[static_cast<std::size_t>(i - 1)] = sum;
        }
        tail_mass_ = 1.0 - cum_.back();

        guide_.resize(kGuideSize + 1);
        std::size_t idx = 0;
        for (std::size_t b = 0; b <= kGuideSize; ++b) {
            double u = static_cast<double>(b) / kGuideSize * cum_.back();
            while (idx + 1 < cum_.size() && cum_[idx] <= u) ++idx;
            guide_[b] = static_cast<std::uint32_t>(idx);
        }
    }

    double theta() const { return theta_; }
    double normalizer() const { return norm_; }
    std::int64_t table_cutoff() const { return table_cutoff_; }
    double tail_mass() const { return tail_mass_; }
    double cumulative(std::int64_t i) const { return cum_.at(static_cast<std::size_t>(i - 1)); }

    /// p_i = c * i^(-1/theta).
    double pmf(std::int64_t i) const {
        if (i < 1) throw std::domain_error("pmf: urn label i >= 1 required");
        return norm_ * std::pow(static_cast<double>(i), -s_);
    }

    /// alpha(x) = max{i >= 1 : p_i >= 1/x} = floor((c x)^theta), 0 if none.
    /// Boundary comparisons are snapped with relative tolerance 1e-12.
    std::int64_t alpha(double x) const {
        if (x < 0.0) throw std::domain_error("alpha: x >= 0 required");
        if (x == 0.0) return 0;
        double cx = norm_ * x;
        auto qualifies = [&](std::int64_t i) {
            return i >= 1 && std::pow(static_cast<double>(i), s_) <= cx * (1.0 + 1e-12);
        };
        auto i = static_cast<std::int64_t>(std::floor(std::pow(cx, theta_)));
        if (i < 0) i = 0;
        while (qualifies(i + 1)) ++i;
        while (i >= 1 && !qualifies(i)) --i;
        return i;
    }

    /// One draw by inverse CDF over the table, Pareto rejection in the tail.
    std::int64_t sample(Engine& eng) const {
        double u = uniform01(eng);
        if (u < cum_.back()) {
            std::size_t b = static_cast<std::size_t>(u / cum_.back() * kGuideSize);
            if (b >= kGuideSize) b = kGuideSize - 1;
            std::size_t lo = guide_[b];
            std::size_t hi = std::min<std::size_t>(guide_[b + 1] + 1, cum_.size());
            auto it = std::upper_bound(cum_.begin() + static_cast<std::ptrdiff_t>(lo),
                                       cum_.begin() + static_cast<std::ptrdiff_t>(hi), u);
            return (it - cum_.begin()) + 1;
        }
        return sample_tail(eng);
    }

    std::vector<std::int64_t> sample(Engine& eng, std::int64_t count) const {
        if (count < 0) throw std::domain_error("sample: count >= 0 required");
        std::vector<std::int64_t> out(static_cast<std::size_t>(count));
        for (auto& v : out) v = sample(eng);
        return out;
    }

    /// M(t) = sum_i (1 - e^{-t p_i}), absolute error below eps.
    double mean_occupied(double t, double eps = 1e-9) const {
        return mean_at_least_k(t, 1, eps);
    }

    /// sum_i P(Pois(t p_i) >= k), absolute error below eps.
    double mean_at_least_k(double t, std::int64_t k, double eps = 1e-9) const {
        check_expect_args(t, k, eps);
        if (t == 0.0) return 0.0;
        std::int64_t N = series_cutoff(t);
        double sum = 0.0, comp = 0.0;
        for (std::int64_t i = 1; i <= N; ++i) {
            double lam = t * pmf(i);
            kahan_add(sum, comp, k == 1 ? -std::expm1(-lam) : poisson_sf(k, lam));
        }
        // tail over i > N: sum_l (-1)^{l-k} C(l-1,k-1) (t p_N)^l / l! * H_l
        double x = t * norm_ * std::pow(static_cast<double>(N), -s_);
        double r = 1.0;
        for (std::int64_t j = 1; j <= k; ++j) r *= x / static_cast<double>(j);
        double cfac = 1.0;
        double sign = 1.0;
        const std::int64_t cap = k + kSeriesSlack;
        for (std::int64_t l = k; l <= cap; ++l) {
            double term = cfac * r * scaled_zeta_tail(static_cast<double>(l) * s_, N);
            kahan_add(sum, comp, sign * term);
            if (term < eps * 0.25 && l > k + 2) return sum;
            r *= x / static_cast<double>(l + 1);
            cfac *= static_cast<double>(l) / static_cast<double>(l - k + 1);
            sign = -sign;
        }
        throw std::runtime_error("mean_at_least_k: tail series did not converge");
    }

    /// M_k(t) = sum_i P(Pois(t p_i) = k), absolute error below eps.
    double mean_exact_k(double t, std::int64_t k, double eps = 1e-9) const {
        check_expect_args(t, k, eps);
        if (t == 0.0) return 0.0;
        std::int64_t N = series_cutoff(t);
        double sum = 0.0, comp = 0.0;
        for (std::int64_t i = 1; i <= N; ++i)
            kahan_add(sum, comp, poisson_pmf(k, t * pmf(i)));
        double x = t * norm_ * std::pow(static_cast<double>(N), -s_);
        double r = 1.0;
        for (std::int64_t j = 1; j <= k; ++j) r *= x / static_cast<double>(j);
        double cfac = 1.0; // C(l,k) at l=k
        double sign = 1.0;
        const std::int64_t cap = k + kSeriesSlack;
        for (std::int64_t l = k; l <= cap; ++l) {
            double term = cfac * r * scaled_zeta_tail(static_cast<double>(l) * s_, N);
            kahan_add(sum, comp, sign * term);
            if (term < eps * 0.25 && l > k + 2) return sum;
            r *= x / static_cast<double>(l + 1);
            cfac *= static_cast<double>(l + 1) / static_cast<double>(l + 1 - k);
            sign = -sign;
        }
        throw std::runtime_error("mean_exact_k: tail series did not converge");
    }

    /// E R*_{m,k} = sum_i P(Bin(m, p_i) >= k), absolute error below eps.
    double binomial_mean_at_least(std::int64_t m, std::int64_t k, double eps = 1e-9) const {
        if (m < 0) throw std::domain_error("binomial_mean_at_least: m >= 0 required");
        check_expect_args(static_cast<double>(m), k, eps);
        if (m == 0 || k > m) return 0.0;
        std::int64_t N = series_cutoff(static_cast<double>(m));
        double sum = 0.0, comp = 0.0;
        for (std::int64_t i = 1; i <= N; ++i)
            kahan_add(sum, comp, binom_sf(m, pmf(i), k));
        double pN = norm_ * std::pow(static_cast<double>(N), -s_);
        double b = 1.0; // C(m,l) pN^l, built up to l=k
        for (std::int64_t j = 0; j < k; ++j)
            b *= static_cast<double>(m - j) * pN / static_cast<double>(j + 1);
        double cfac = 1.0;
        double sign = 1.0;
        const std::int64_t cap = k + kSeriesSlack;
        for (std::int64_t l = k; l <= cap; ++l) {
            double term = cfac * b * scaled_zeta_tail(static_cast<double>(l) * s_, N);
            kahan_add(sum, comp, sign * term);
            if (term < eps * 0.25 && l > k + 2) return sum;
            if (l >= m) return sum; // C(m,l)=0 beyond l=m
            b *= static_cast<double>(m - l) * pN / static_cast<double>(l + 1);
            cfac *= static_cast<double>(l) / static_cast<double>(l - k + 1);
            sign = -sign;
        }
        throw std::runtime_error("binomial_mean_at_least: tail series did not converge");
    }

    /// E R_{m,k} = sum_i P(Bin(m, p_i) = k).
    double binomial_mean_exact(std::int64_t m, std::int64_t k, double eps = 1e-9) const {
        return binomial_mean_at_least(m, k, eps * 0.5) -
               binomial_mean_at_least(m, k + 1, eps * 0.5);
    }

private:
    static constexpr std::size_t kGuideSize = 4096;
    static constexpr std::int64_t kSeriesSlack = 120;

    static void kahan_add(double& sum, double& comp, double term) {
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    static void check_expect_args(double t, std::int64_t k, double eps) {
        if (t < 0.0) throw std::domain_error("expectation: t >= 0 required");
        if (k < 1) throw std::domain_error("expectation: k >= 1 required");
        if (!(eps > 0.0)) throw std::domain_error("expectation: eps > 0 required");
    }

    /// N with scale * p_N <= 1/2 so the factorial-moment tail contracts.
    std::int64_t series_cutoff(double scale) const {
        double N = std::pow(2.0 * scale * norm_, theta_);
        if (N > 5e7) throw std::domain_error("expectation: scale too large");
        return std::max<std::int64_t>(64, static_cast<std::int64_t>(std::ceil(N)));
    }

    /// N^{se} * sum_{i>N} i^{-se}, the zeta tail with the blow-up folded out.
    static double scaled_zeta_tail(double se, std::int64_t N) {
        double a = static_cast<double>(N) + 1.0;
        double lr = -se * std::log1p(1.0 / static_cast<double>(N)); // log(N^se a^-se)
        if (lr < -740.0) return 0.0;
        double base = std::exp(lr);
        double inv = 1.0 / a;
        double v = base * a / (se - 1.0) + 0.5 * base;
        double t1 = se * inv;
        v += base * t1 / 12.0;
        double t3 = t1 * (se + 1.0) * (se + 2.0) * inv * inv;
        v -= base * t3 / 720.0;
        double t5 = t3 * (se + 3.0) * (se + 4.0) * inv * inv;
        v += base * t5 / 30240.0;
        double t7 = t5 * (se + 5.0) * (se + 6.0) * inv * inv;
        v -= base * t7 / 1209600.0;
        return v;
    }

    std::int64_t sample_tail(Engine& eng) const {
        double nlo = static_cast<double>(table_cutoff_) + 0.5;
        for (int iter = 0; iter < 1000; ++iter) {
            double u = uniform01(eng);
            double x = nlo * std::pow(1.0 - u, -1.0 / (s_ - 1.0));
            if (!(x < 4.0e18)) continue;
            double xi = std::floor(x + 0.5);
            double integral =
                (std::pow(xi - 0.5, 1.0 - s_) - std::pow(xi + 0.5, 1.0 - s_)) / (s_ - 1.0);
            double accept = std::pow(xi, -s_) / integral;
            if (uniform01(eng) < accept) return static_cast<std::int64_t>(xi);
        }
        throw std::runtime_error("PowerLawPmf: tail rejection failed to accept");
    }

    double theta_;
    double s_;
    double norm_ = 0.0;
    std::int64_t table_cutoff_ = 0;
    double tail_mass_ = 0.0;
    std::vector<double> cum_;
    std::vector<std::uint32_t> guide_;
};

} // namespace urns
