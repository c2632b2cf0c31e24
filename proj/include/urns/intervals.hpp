#pragma once

// Canonical algebra of finite unions of closed intervals in [0, inf),
// the endpoint parameterization of d-interval unions, circular arcs,
// and exact integer-point counting of nA.
//
// Conventions (fixed project-wide):
//   * all intervals are closed; degenerate points [x,x] are allowed and
//     contribute zero measure;
//   * near-touching endpoints are snapped together with tolerance 1e-12,
//     so canonical form is stable under arithmetic noise;
//   * set differences are computed up to measure-zero boundary: results
//     are again closed sets, and zero-length boundary residues are
//     dropped.  Only integer counting is endpoint-sensitive, and it is
//     defined directly on the canonical closed intervals with exact
//     rational comparisons m/n vs endpoint.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace urns {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Interval&) const = default;
};

class IntervalSet {
public:
    static constexpr double kSnapTol = 1e-12;

    IntervalSet() = default;

    explicit IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) {
        for (const auto& iv : parts_) {
            if (!(iv.lo <= iv.hi))
                throw std::domain_error("IntervalSet: interval with lo > hi");
            if (iv.lo < 0.0)
                throw std::domain_error("IntervalSet: negative endpoint");
        }
        canonicalize();
    }

    static IntervalSet single(double lo, double hi) {
        return IntervalSet(std::vector<Interval>{{lo, hi}});
    }

    static IntervalSet unit() { return single(0.0, 1.0); }

    /// Parses "lo1:hi1,lo2:hi2,...".  Throws std::invalid_argument on bad input.
    static IntervalSet parse(std::string_view text) {
        std::vector<Interval> parts;
        std::size_t pos = 0;
        if (text.empty()) return IntervalSet{};
        while (pos <= text.size()) {
            std::size_t comma = text.find(',', pos);
            std::string_view piece = text.substr(
                pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
            std::size_t colon = piece.find(':');
            if (colon == std::string_view::npos)
                throw std::invalid_argument("set expression: expected lo:hi in '" +
                                            std::string(piece) + "'");
            auto num = [](std::string_view s) {
                try {
                    std::size_t used = 0;
                    double v = std::stod(std::string(s), &used);
                    if (used != s.size()) throw std::invalid_argument("trailing");
                    return v;
                } catch (const std::exception&) {
                    throw std::invalid_argument("set expression: bad number '" +
                                                std::string(s) + "'");
                }
            };
            double lo = num(piece.substr(0, colon));
            double hi = num(piece.substr(colon + 1));
            if (!(lo <= hi))
                throw std::invalid_argument("set expression: lo > hi");
            parts.push_back({lo, hi});
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        return IntervalSet(std::move(parts));
    }

    std::string str() const {
        std::string out;
        char buf[40];
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (i) out += ',';
            auto put = [&](double v) {
                auto res = std::to_chars(buf, buf + sizeof(buf), v);
                out.append(buf, res.ptr);
            };
            put(parts_[i].lo);
            out += ':';
            put(parts_[i].hi);
        }
        return out;
    }

    const std::vector<Interval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    std::size_t size() const { return parts_.size(); }

    double measure() const {
        double m = 0.0;
        for (const auto& iv : parts_) m += iv.hi - iv.lo;
        return m;
    }

    double min() const { return parts_.empty() ? 0.0 : parts_.front().lo; }
    double max() const { return parts_.empty() ? 0.0 : parts_.back().hi; }

    bool contains(double x) const {
        auto it = std::upper_bound(parts_.begin(), parts_.end(), x,
                                   [](double v, const Interval& iv) { return v < iv.lo; });
        if (it == parts_.begin()) return false;
        --it;
        return x <= it->hi;
    }

    bool operator==(const IntervalSet& o) const { return parts_ == o.parts_; }

private:
    void canonicalize() {
        std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) {
            return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
        });
        std::vector<Interval> merged;
        for (const auto& iv : parts_) {
            if (!merged.empty() && iv.lo <= merged.back().hi + kSnapTol) {
                merged.back().hi = std::max(merged.back().hi, iv.hi);
            } else {
                merged.push_back(iv);
            }
        }
        parts_ = std::move(merged);
    }

    std::vector<Interval> parts_;
};

inline IntervalSet union_of(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> parts = a.parts();
    parts.insert(parts.end(), b.parts().begin(), b.parts().end());
    return IntervalSet(std::move(parts));
}

inline IntervalSet intersection(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> parts;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const Interval& x = a.parts()[i];
        const Interval& y = b.parts()[j];
        double lo = std::max(x.lo, y.lo);
        double hi = std::min(x.hi, y.hi);
        if (lo <= hi) parts.push_back({lo, hi});
        if (x.hi < y.hi) ++i; else ++j;
    }
    return IntervalSet(std::move(parts));
}

/// a minus b, up to measure-zero boundary (results are closed; zero-length
/// residues are dropped, but degenerate points of `a` not covered by `b`
/// survive).
inline IntervalSet difference(const IntervalSet& a, const IntervalSet& b) {
    std::vector<Interval> parts;
    for (const auto& x : a.parts()) {
        if (x.hi - x.lo <= IntervalSet::kSnapTol) {
            if (!b.contains(x.lo)) parts.push_back(x);
            continue;
        }
        double cur = x.lo;
        for (const auto& y : b.parts()) {
            if (y.hi < cur) continue;
            if (y.lo > x.hi) break;
            if (y.lo > cur && y.lo - cur > IntervalSet::kSnapTol)
                parts.push_back({cur, y.lo});
            cur = std::max(cur, y.hi);
            if (cur >= x.hi) break;
        }
        if (x.hi - cur > IntervalSet::kSnapTol) parts.push_back({cur, x.hi});
    }
    return IntervalSet(std::move(parts));
}

inline IntervalSet symmetric_difference(const IntervalSet& a, const IntervalSet& b) {
    return union_of(difference(a, b), difference(b, a));
}

/// Endpoint parameterization of a union of d intervals in [0,1].
struct Endpoints {
    std::vector<double> lows;
    std::vector<double> highs;

    Endpoints() = default;
    Endpoints(std::vector<double> lo, std::vector<double> hi)
        : lows(std::move(lo)), highs(std::move(hi)) {
        if (lows.size() != highs.size())
            throw std::domain_error("Endpoints: lows/highs size mismatch");
        for (std::size_t i = 0; i < lows.size(); ++i)
            if (!(lows[i] <= highs[i]))
                throw std::domain_error("Endpoints: lows[i] > highs[i]");
    }

    std::size_t d() const { return lows.size(); }

    /// max_i max(|lows-o.lows|, |highs-o.highs|), the sup-norm on I_d.
    double dist(const Endpoints& o) const {
        double m = 0.0;
        for (std::size_t i = 0; i < lows.size(); ++i) {
            m = std::max(m, std::fabs(lows[i] - o.lows[i]));
            m = std::max(m, std::fabs(highs[i] - o.highs[i]));
        }
        return m;
    }
};

inline IntervalSet from_endpoints(const Endpoints& t) {
    std::vector<Interval> parts;
    parts.reserve(t.d());
    for (std::size_t i = 0; i < t.d(); ++i) parts.push_back({t.lows[i], t.highs[i]});
    return IntervalSet(std::move(parts));
}

/// Circular arcs on [0,1]: forward arc of length t starting at s, and
/// backward arc of length t ending at s, both with wraparound.
struct CircularArcs {
    IntervalSet forward;
    IntervalSet backward;
};

inline CircularArcs circular_arcs(double s, double t) {
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
        throw std::domain_error("circular_arcs: s, t must lie in [0,1]");
    IntervalSet fwd = (s + t <= 1.0)
        ? IntervalSet::single(s, s + t)
        : IntervalSet({{s, 1.0}, {0.0, s + t - 1.0}});
    IntervalSet bwd = (s - t >= 0.0)
        ? IntervalSet::single(s - t, s)
        : IntervalSet({{0.0, s}, {s - t + 1.0, 1.0}});
    return {std::move(fwd), std::move(bwd)};
}

// ---------------------------------------------------------------------------
// Exact integer counting on nA.
//
// Membership of an integer m in n*[lo,hi] is decided by the exact sign of
// m - n*x, obtained from the dyadic decomposition of the double endpoint.
// A long-double prefilter keeps the exact path to the boundary cases only.

namespace detail {

inline int compare_index_bound(std::int64_t m, std::int64_t n, double x) {
    if (x <= 0.0) {
        if (x == 0.0) return m > 0 ? 1 : 0;
        return 1; // n*x < 0 <= m
    }
    long double approx = static_cast<long double>(n) * static_cast<long double>(x);
    if (static_cast<long double>(m) > approx + 2.0L) return 1;
    if (static_cast<long double>(m) < approx - 2.0L) return -1;
    int e = 0;
    double fr = std::frexp(x, &e);
    auto sig = static_cast<std::int64_t>(std::ldexp(fr, 53)); // x = sig * 2^(e-53)
    int d = 53 - e;
    if (d < 0) return -1;      // x >= 2^53: unreachable past the prefilter
    if (d >= 94) return m >= 1 ? 1 : -1; // rhs < 2^94 while lhs >= 2^94
    __int128 lhs = static_cast<__int128>(m) << d;
    __int128 rhs = static_cast<__int128>(n) * sig;
    return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

/// Smallest integer m >= 0 with m >= n*x.
inline std::int64_t first_index_geq(std::int64_t n, double x) {
    if (x <= 0.0) return 0;
    auto g = static_cast<std::int64_t>(
        std::ceil(static_cast<long double>(n) * static_cast<long double>(x)));
    if (g < 0) g = 0;
    while (compare_index_bound(g, n, x) < 0) ++g;
    while (g > 0 && compare_index_bound(g - 1, n, x) >= 0) --g;
    return g;
}

/// Largest integer m >= 0 with m <= n*x, or -1 if none.
inline std::int64_t last_index_leq(std::int64_t n, double x) {
    if (x < 0.0) return -1;
    auto g = static_cast<std::int64_t>(
        std::floor(static_cast<long double>(n) * static_cast<long double>(x)));
    if (g < 0) g = -1;
    while (compare_index_bound(g + 1, n, x) <= 0) ++g;
    while (g >= 0 && compare_index_bound(g, n, x) > 0) --g;
    return g;
}

} // namespace detail

struct IndexRange {
    std::int64_t lo = 1;
    std::int64_t hi = 0; // inclusive; empty when lo > hi
    std::int64_t count() const { return hi >= lo ? hi - lo + 1 : 0; }
};

/// Integer members of nA within Z_+ = {1, 2, ...}, as inclusive ranges.
inline std::vector<IndexRange> integerize(const IntervalSet& a, std::int64_t n) {
    if (n < 1) throw std::domain_error("integerize: n >= 1 required");
    std::vector<IndexRange> out;
    for (const auto& iv : a.parts()) {
        std::int64_t lo = std::max<std::int64_t>(1, detail::first_index_geq(n, iv.lo));
        std::int64_t hi = detail::last_index_leq(n, iv.hi);
        if (lo <= hi) out.push_back({lo, hi});
    }
    return out;
}

/// #(nA) = |nA intersected with Z_+| on closed intervals.
inline std::int64_t integer_count(const IntervalSet& a, std::int64_t n) {
    std::int64_t c = 0;
    for (const auto& r : integerize(a, n)) c += r.count();
    return c;
}

} // namespace urns
