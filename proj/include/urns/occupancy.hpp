#pragma once

// Simulation of the fixed-n scheme and its Poissonization, and the
// counting statistics over index sets nA: at-least-k counts R*_{nA,k},
// exact counts R_{nA,k}, standardized fields Y, and the weighted sum Q.
//
// Ball m belongs to nA iff m/n lies in the closed set A; the comparison
// is exact (see intervals.hpp).  Counting keys urns with an open-address
// map sized to the number of occupied urns, which is around M(n) and far
// below the label range.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "urns/intervals.hpp"
#include "urns/power_law.hpp"
#include "urns/rng.hpp"

namespace urns {

struct BallSequence {
    std::int64_t n = 0;
    std::vector<std::int64_t> labels; // labels[m-1] = X_m
};

struct PoissonRealization {
    double horizon = 0.0;
    std::vector<double> arrivals; // strictly increasing in (0, horizon]
    std::vector<std::int64_t> labels;
};

enum class CountMode { at_least, exact };

struct Query {
    IntervalSet set;
    std::int64_t k = 1;
    CountMode mode = CountMode::at_least;
};

enum class SchemeKind { fixed, poissonized };

struct CountResult {
    std::int64_t raw = 0;
    double expectation = 0.0;
    double standardized = 0.0;
    bool degenerate = false; // zero variance scale (M = 0)
};

inline BallSequence simulate_fixed(const PowerLawPmf& pmf, std::int64_t n, Engine& eng) {
    if (n < 1) throw std::domain_error("simulate_fixed: n >= 1 required");
    BallSequence seq;
    seq.n = n;
    seq.labels = pmf.sample(eng, n);
    return seq;
}

inline void simulate_poisson(const PowerLawPmf& pmf, double horizon, Engine& eng,
                             PoissonRealization& out) {
    if (!(horizon > 0.0)) throw std::domain_error("simulate_poisson: horizon > 0 required");
    out.horizon = horizon;
    out.arrivals.clear();
    out.labels.clear();
    double t = exponential1(eng);
    while (t <= horizon) {
        if (!out.arrivals.empty() && t <= out.arrivals.back())
            t = std::nextafter(out.arrivals.back(), std::numeric_limits<double>::infinity());
        if (t > horizon) break;
        out.arrivals.push_back(t);
        out.labels.push_back(pmf.sample(eng));
        t += exponential1(eng);
    }
}

inline PoissonRealization simulate_poisson(const PowerLawPmf& pmf, double horizon,
                                           Engine& eng) {
    PoissonRealization out;
    simulate_poisson(pmf, horizon, eng, out);
    return out;
}

namespace detail {

// Open-addressing urn -> dense-id map with epoch-based O(1) reset.
class UrnIndex {
public:
    explicit UrnIndex(std::size_t expected = 64) { reserve_slots(expected); }

    void clear() {
        if (++epoch_ == 0) {
            for (auto& s : table_) s.epoch = 0;
            epoch_ = 1;
        }
        next_id_ = 0;
    }

    std::uint32_t id_of(std::uint64_t key) {
        if (next_id_ * 10 >= table_.size() * 7) grow();
        std::size_t mask = table_.size() - 1;
        std::size_t pos = mix(key) & mask;
        for (;;) {
            Slot& s = table_[pos];
            if (s.epoch != epoch_) {
                s.epoch = epoch_;
                s.key = key;
                s.id = next_id_++;
                return s.id;
            }
            if (s.key == key) return s.id;
            pos = (pos + 1) & mask;
        }
    }

    std::uint32_t distinct() const { return next_id_; }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& s : table_)
            if (s.epoch == epoch_) f(s.key, s.id);
    }

private:
    struct Slot {
        std::uint64_t key = 0;
        std::uint32_t epoch = 0;
        std::uint32_t id = 0;
    };

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    void reserve_slots(std::size_t expected) {
        std::size_t cap = 64;
        while (cap < expected * 2) cap <<= 1;
        table_.assign(cap, Slot{});
        epoch_ = 1;
        next_id_ = 0;
    }

    void grow() {
        std::vector<Slot> old = std::move(table_);
        table_.assign(old.size() * 2, Slot{});
        std::size_t mask = table_.size() - 1;
        for (const auto& s : old) {
            if (s.epoch != epoch_) continue;
            std::size_t pos = mix(s.key) & mask;
            while (table_[pos].epoch == epoch_) pos = (pos + 1) & mask;
            table_[pos] = s;
        }
    }

    std::vector<Slot> table_;
    std::uint32_t epoch_ = 0;
    std::uint32_t next_id_ = 0;
};

inline void check_unit_set(const IntervalSet& a) {
    if (!a.empty() && a.max() > 1.0 + IntervalSet::kSnapTol)
        throw std::domain_error("count: query set must lie within [0,1]");
}

} // namespace detail

/// Reusable scratch for counting; one per thread.
struct CountScratch {
    detail::UrnIndex index;
    std::vector<std::uint32_t> counts;
};

/// Number of urns with (at least | exactly) k member balls among the first
/// n labels, member = index in nA.
inline std::int64_t count(const std::int64_t* labels, std::int64_t n, const Query& q,
                          CountScratch& scratch) {
    detail::check_unit_set(q.set);
    if (q.k < 1) throw std::domain_error("count: k >= 1 required");
    scratch.index.clear();
    scratch.counts.clear();
    for (const auto& r : integerize(q.set, n)) {
        std::int64_t hi = std::min(r.hi, n);
        for (std::int64_t m = r.lo; m <= hi; ++m) {
            std::uint32_t id = scratch.index.id_of(static_cast<std::uint64_t>(labels[m - 1]));
            if (id >= scratch.counts.size()) scratch.counts.push_back(0);
            ++scratch.counts[id];
        }
    }
    std::int64_t total = 0;
    auto kk = static_cast<std::uint32_t>(std::min<std::int64_t>(q.k, 0x7fffffff));
    for (std::uint32_t id = 0; id < scratch.index.distinct(); ++id) {
        std::uint32_t c = scratch.counts[id];
        total += (q.mode == CountMode::at_least) ? (c >= kk) : (c == kk);
    }
    return total;
}

inline std::int64_t count(const BallSequence& seq, const Query& q, CountScratch& scratch) {
    return count(seq.labels.data(), seq.n, q, scratch);
}

inline std::int64_t count(const BallSequence& seq, const Query& q) {
    CountScratch scratch;
    return count(seq, q, scratch);
}

/// Same statistic for the Poissonized scheme: arrivals in tA.
inline std::int64_t count_poisson(const PoissonRealization& real, double t, const Query& q,
                                  CountScratch& scratch) {
    if (q.k < 1) throw std::domain_error("count_poisson: k >= 1 required");
    if (t < 0.0) throw std::domain_error("count_poisson: t >= 0 required");
    if (t * q.set.max() > real.horizon * (1.0 + 1e-12))
        throw std::domain_error("count_poisson: t*A exceeds realization horizon");
    scratch.index.clear();
    scratch.counts.clear();
    const auto& arr = real.arrivals;
    for (const auto& iv : q.set.parts()) {
        auto first = std::lower_bound(arr.begin(), arr.end(), t * iv.lo);
        auto last = std::upper_bound(first, arr.end(), t * iv.hi);
        for (auto it = first; it != last; ++it) {
            std::size_t idx = static_cast<std::size_t>(it - arr.begin());
            std::uint32_t id =
                scratch.index.id_of(static_cast<std::uint64_t>(real.labels[idx]));
            if (id >= scratch.counts.size()) scratch.counts.push_back(0);
            ++scratch.counts[id];
        }
    }
    std::int64_t total = 0;
    auto kk = static_cast<std::uint32_t>(std::min<std::int64_t>(q.k, 0x7fffffff));
    for (std::uint32_t id = 0; id < scratch.index.distinct(); ++id) {
        std::uint32_t c = scratch.counts[id];
        total += (q.mode == CountMode::at_least) ? (c >= kk) : (c == kk);
    }
    return total;
}

inline std::int64_t count_poisson(const PoissonRealization& real, double t, const Query& q) {
    CountScratch scratch;
    return count_poisson(real, t, q, scratch);
}

/// All queries in one pass: per-urn multiplicity vectors, then one sweep
/// over occupied urns.  Results match per-query count() exactly.
inline std::vector<std::int64_t> batch_count(const BallSequence& seq,
                                             const std::vector<Query>& queries,
                                             CountScratch& scratch) {
    if (queries.empty()) throw std::domain_error("batch_count: queries nonempty required");
    const std::size_t Q = queries.size();
    scratch.index.clear();
    scratch.counts.clear();
    for (std::size_t qi = 0; qi < Q; ++qi) {
        detail::check_unit_set(queries[qi].set);
        if (queries[qi].k < 1) throw std::domain_error("batch_count: k >= 1 required");
        for (const auto& r : integerize(queries[qi].set, seq.n)) {
            std::int64_t hi = std::min(r.hi, seq.n);
            for (std::int64_t m = r.lo; m <= hi; ++m) {
                std::uint32_t id =
                    scratch.index.id_of(static_cast<std::uint64_t>(seq.labels[m - 1]));
                std::size_t need = (static_cast<std::size_t>(id) + 1) * Q;
                if (scratch.counts.size() < need) scratch.counts.resize(need, 0);
                ++scratch.counts[static_cast<std::size_t>(id) * Q + qi];
            }
        }
    }
    std::vector<std::int64_t> out(Q, 0);
    for (std::uint32_t id = 0; id < scratch.index.distinct(); ++id) {
        for (std::size_t qi = 0; qi < Q; ++qi) {
            auto c = scratch.counts[static_cast<std::size_t>(id) * Q + qi];
            auto kk = static_cast<std::uint32_t>(queries[qi].k);
            out[qi] += (queries[qi].mode == CountMode::at_least) ? (c >= kk) : (c == kk);
        }
    }
    return out;
}

inline std::vector<std::int64_t> batch_count(const BallSequence& seq,
                                             const std::vector<Query>& queries) {
    CountScratch scratch;
    return batch_count(seq, queries, scratch);
}

/// Exact expectation of the queried count under the given scheme.
inline double count_expectation(const PowerLawPmf& pmf, double n_or_t, const Query& q,
                                SchemeKind kind, double eps = 1e-9) {
    if (kind == SchemeKind::fixed) {
        auto n = static_cast<std::int64_t>(n_or_t);
        std::int64_t m = q.set.empty() ? 0 : integer_count(q.set, n);
        return q.mode == CountMode::at_least ? pmf.binomial_mean_at_least(m, q.k, eps)
                                             : pmf.binomial_mean_exact(m, q.k, eps);
    }
    double ta = n_or_t * q.set.measure();
    return q.mode == CountMode::at_least ? pmf.mean_at_least_k(ta, q.k, eps)
                                         : pmf.mean_exact_k(ta, q.k, eps);
}

/// Standardized field value Y = (raw - E)/sqrt(M(n)) (or M(t)).
inline CountResult standardize(const PowerLawPmf& pmf, std::int64_t raw, double n_or_t,
                               const Query& q, SchemeKind kind) {
    CountResult res;
    res.raw = raw;
    res.expectation = count_expectation(pmf, n_or_t, q, kind);
    double scale = pmf.mean_occupied(n_or_t);
    if (scale > 0.0) {
        res.standardized = (static_cast<double>(raw) - res.expectation) / std::sqrt(scale);
    } else {
        res.standardized = 0.0;
        res.degenerate = true;
    }
    return res;
}

/// Weighted statistic Q = (1/sqrt(M(n))) sum_i a_i (R_{nA,i} - E R_{nA,i}),
/// weights a[0] = a_1, zero-extended beyond a.size().
inline double weighted_Q(const PowerLawPmf& pmf, const BallSequence& seq,
                         const std::vector<double>& a, const IntervalSet& set,
                         double eps = 1e-9) {
    detail::check_unit_set(set);
    CountScratch scratch;
    scratch.index.clear();
    scratch.counts.clear();
    std::int64_t members = 0;
    for (const auto& r : integerize(set, seq.n)) {
        std::int64_t hi = std::min(r.hi, seq.n);
        members += (hi >= r.lo) ? hi - r.lo + 1 : 0;
        for (std::int64_t m = r.lo; m <= hi; ++m) {
            std::uint32_t id =
                scratch.index.id_of(static_cast<std::uint64_t>(seq.labels[m - 1]));
            if (id >= scratch.counts.size()) scratch.counts.push_back(0);
            ++scratch.counts[id];
        }
    }
    double observed = 0.0;
    for (std::uint32_t id = 0; id < scratch.index.distinct(); ++id) {
        std::uint32_t c = scratch.counts[id];
        if (c >= 1 && c <= a.size()) observed += a[c - 1];
    }
    double expected = 0.0;
    if (members > 0 && !a.empty()) {
        auto K = static_cast<std::int64_t>(a.size());
        double term_eps = eps / static_cast<double>(K + 1);
        double b_next = pmf.binomial_mean_at_least(members, 1, term_eps);
        for (std::int64_t k = 1; k <= K; ++k) {
            double b_k = b_next;
            b_next = pmf.binomial_mean_at_least(members, k + 1, term_eps);
            expected += a[static_cast<std::size_t>(k - 1)] * (b_k - b_next);
        }
    }
    double scale = pmf.mean_occupied(static_cast<double>(seq.n));
    return scale > 0.0 ? (observed - expected) / std::sqrt(scale) : 0.0;
}

} // namespace urns
