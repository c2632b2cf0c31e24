#pragma once

// Text application: tokenization, the forward/backward distinct-word
// processes, the circular difference field U_n(s,t), the homogeneity
// functional T_n, theta estimation from the singleton proportion, and
// resampling p-values.
//
// The circular field walks each grid row incrementally: for a fixed start
// s the arcs grow with t, so members are added once per row and the
// distinct count is maintained with epoch-stamped occurrence counters.
// Member index sets come from the same exact integerization as count(),
// so the field matches a brute-force evaluation exactly.

#include <cctype>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "urns/intervals.hpp"
#include "urns/occupancy.hpp"
#include "urns/parallel.hpp"
#include "urns/power_law.hpp"

namespace urns {

struct TokenSeq {
    std::vector<std::int32_t> ids; // dense identifiers in 1..vocab
    std::int32_t vocab = 0;
    std::int64_t n() const { return static_cast<std::int64_t>(ids.size()); }
};

struct Tokenized {
    TokenSeq seq;
    std::vector<std::string> words; // words[id-1]
};

/// Lowercased maximal runs of ASCII letters; digits and punctuation split.
inline Tokenized tokenize(std::string_view text) {
    Tokenized out;
    std::unordered_map<std::string, std::int32_t> lookup;
    std::string word;
    auto flush = [&]() {
        if (word.empty()) return;
        auto [it, inserted] = lookup.try_emplace(word, out.seq.vocab + 1);
        if (inserted) {
            ++out.seq.vocab;
            out.words.push_back(word);
        }
        out.seq.ids.push_back(it->second);
        word.clear();
    };
    for (char ch : text) {
        auto u = static_cast<unsigned char>(ch);
        if (std::isalpha(u))
            word.push_back(static_cast<char>(std::tolower(u)));
        else
            flush();
    }
    flush();
    if (out.seq.ids.empty()) throw std::invalid_argument("tokenize: no tokens in input");
    return out;
}

/// Remaps arbitrary urn labels to dense token identifiers.
inline TokenSeq tokens_from_labels(const std::vector<std::int64_t>& labels) {
    TokenSeq seq;
    seq.ids.reserve(labels.size());
    std::unordered_map<std::int64_t, std::int32_t> lookup;
    for (auto l : labels) {
        auto [it, inserted] = lookup.try_emplace(l, seq.vocab + 1);
        if (inserted) ++seq.vocab;
        seq.ids.push_back(it->second);
    }
    return seq;
}

inline std::int64_t distinct_count(const TokenSeq& seq) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(seq.vocab) + 1, 0);
    std::int64_t r = 0;
    for (auto id : seq.ids) {
        if (!seen[static_cast<std::size_t>(id)]) {
            seen[static_cast<std::size_t>(id)] = 1;
            ++r;
        }
    }
    return r;
}

inline std::int64_t singleton_count(const TokenSeq& seq) {
    std::vector<std::int32_t> cnt(static_cast<std::size_t>(seq.vocab) + 1, 0);
    for (auto id : seq.ids) ++cnt[static_cast<std::size_t>(id)];
    std::int64_t r = 0;
    for (auto c : cnt) r += (c == 1);
    return r;
}

/// theta_hat = R_{n,1}/R_n, clamped to [1e-3, 1-1e-3] for downstream use.
inline double theta_hat(const TokenSeq& seq) {
    if (seq.n() < 1) throw std::domain_error("theta_hat: nonempty sequence required");
    double ratio = static_cast<double>(singleton_count(seq)) /
                   static_cast<double>(distinct_count(seq));
    return std::min(1.0 - 1e-3, std::max(1e-3, ratio));
}

namespace detail {

inline std::int64_t grid_size(double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 1.0))
        throw std::domain_error("grid_step must lie in (0,1]");
    auto G = static_cast<std::int64_t>(std::llround(1.0 / grid_step));
    if (G < 1 || std::fabs(static_cast<double>(G) * grid_step - 1.0) > 1e-9)
        throw std::domain_error("grid_step must divide 1");
    return G;
}

// Incremental distinct counter over growing integer-range unions.
class DistinctWalker {
public:
    DistinctWalker(const TokenSeq& seq, std::vector<std::int32_t>& cnt,
                   std::vector<std::uint32_t>& stamp, std::uint32_t& epoch)
        : seq_(seq), cnt_(cnt), stamp_(stamp), epoch_(epoch) {}

    void reset() {
        ++epoch_;
        old_.clear();
        distinct_ = 0;
    }

    /// Advances to a superset of the previous ranges; returns the distinct count.
    std::int64_t advance(const std::vector<IndexRange>& ranges) {
        std::size_t oi = 0;
        for (const auto& r : ranges) {
            std::int64_t cur = r.lo;
            while (cur <= r.hi) {
                while (oi < old_.size() && old_[oi].hi < cur) ++oi;
                if (oi < old_.size() && old_[oi].lo <= cur) {
                    cur = old_[oi].hi + 1;
                    continue;
                }
                std::int64_t stop = r.hi;
                if (oi < old_.size() && old_[oi].lo <= r.hi)
                    stop = old_[oi].lo - 1;
                for (std::int64_t m = cur; m <= stop; ++m) add(m);
                cur = stop + 1;
            }
        }
        old_ = ranges;
        return distinct_;
    }

private:
    void add(std::int64_t m) {
        auto id = static_cast<std::size_t>(seq_.ids[static_cast<std::size_t>(m - 1)]);
        if (stamp_[id] != epoch_) {
            stamp_[id] = epoch_;
            cnt_[id] = 0;
        }
        if (cnt_[id]++ == 0) ++distinct_;
    }

    const TokenSeq& seq_;
    std::vector<std::int32_t>& cnt_;
    std::vector<std::uint32_t>& stamp_;
    std::uint32_t& epoch_;
    std::vector<IndexRange> old_;
    std::int64_t distinct_ = 0;
};

struct WalkScratch {
    std::vector<std::int32_t> cnt;
    std::vector<std::uint32_t> stamp;
    std::uint32_t epoch = 0;

    void fit(std::int32_t vocab) {
        if (cnt.size() < static_cast<std::size_t>(vocab) + 1) {
            cnt.assign(static_cast<std::size_t>(vocab) + 1, 0);
            stamp.assign(static_cast<std::size_t>(vocab) + 1, 0);
            epoch = 0;
        }
    }
};

} // namespace detail

/// Forward and backward distinct-word processes on the grid t_j = j*grid_step.
struct ProcessPair {
    std::vector<double> ts;
    std::vector<std::int64_t> forward;  // R*_{n[0,t],1}
    std::vector<std::int64_t> backward; // R*_{n[1-t,1],1}
};

inline ProcessPair forward_backward(const TokenSeq& seq, double grid_step) {
    auto G = detail::grid_size(grid_step);
    ProcessPair out;
    detail::WalkScratch ws;
    ws.fit(seq.vocab);
    detail::DistinctWalker fwd(seq, ws.cnt, ws.stamp, ws.epoch);
    out.ts.push_back(0.0);
    out.forward.push_back(0);
    fwd.reset();
    for (std::int64_t j = 1; j <= G; ++j) {
        double t = static_cast<double>(j) * grid_step;
        out.ts.push_back(t);
        out.forward.push_back(
            fwd.advance(integerize(IntervalSet::single(0.0, t), seq.n())));
    }
    detail::DistinctWalker bwd(seq, ws.cnt, ws.stamp, ws.epoch);
    bwd.reset();
    // closed suffix [1,1] already holds the boundary ball m = n
    out.backward.push_back(
        bwd.advance(integerize(IntervalSet::single(1.0, 1.0), seq.n())));
    for (std::int64_t j = 1; j <= G; ++j) {
        double t = static_cast<double>(j) * grid_step;
        out.backward.push_back(
            bwd.advance(integerize(IntervalSet::single(1.0 - t, 1.0), seq.n())));
    }
    return out;
}

/// Circular difference field on the midpoint grid s_j = (j-1/2)h, t_l = (l-1/2)h.
struct UField {
    double grid_step = 0.0;
    std::vector<double> s, t;   // midpoints, size G
    std::vector<std::int64_t> u; // row-major: u[j*G + l]
    std::int64_t r_n = 0;

    std::int64_t at(std::size_t j, std::size_t l) const { return u[j * t.size() + l]; }
};

inline void circular_field(const TokenSeq& seq, double grid_step, UField& out,
                           detail::WalkScratch& ws) {
    auto G = detail::grid_size(grid_step);
    out.grid_step = grid_step;
    out.s.resize(static_cast<std::size_t>(G));
    out.t.resize(static_cast<std::size_t>(G));
    for (std::int64_t j = 1; j <= G; ++j)
        out.s[static_cast<std::size_t>(j - 1)] =
            (static_cast<double>(j) - 0.5) * grid_step;
    out.t = out.s;
    out.u.assign(static_cast<std::size_t>(G) * static_cast<std::size_t>(G), 0);
    out.r_n = distinct_count(seq);

    ws.fit(seq.vocab);
    const std::int64_t n = seq.n();
    for (std::int64_t j = 0; j < G; ++j) {
        double s = out.s[static_cast<std::size_t>(j)];
        detail::DistinctWalker fwd(seq, ws.cnt, ws.stamp, ws.epoch);
        fwd.reset();
        std::vector<std::int64_t> fcounts(static_cast<std::size_t>(G));
        for (std::int64_t l = 0; l < G; ++l) {
            auto arcs = circular_arcs(s, out.t[static_cast<std::size_t>(l)]);
            fcounts[static_cast<std::size_t>(l)] = fwd.advance(integerize(arcs.forward, n));
        }
        detail::DistinctWalker bwd(seq, ws.cnt, ws.stamp, ws.epoch);
        bwd.reset();
        for (std::int64_t l = 0; l < G; ++l) {
            auto arcs = circular_arcs(s, out.t[static_cast<std::size_t>(l)]);
            auto b = bwd.advance(integerize(arcs.backward, n));
            out.u[static_cast<std::size_t>(j) * static_cast<std::size_t>(G) +
                  static_cast<std::size_t>(l)] = fcounts[static_cast<std::size_t>(l)] - b;
        }
    }
}

inline UField circular_field(const TokenSeq& seq, double grid_step) {
    UField out;
    detail::WalkScratch ws;
    circular_field(seq, grid_step, out, ws);
    return out;
}

/// T_n = (1/R_n) Int Int U_n(s,t)^2 ds dt by the midpoint rule.
inline double homogeneity_stat(const UField& field) {
    if (field.r_n <= 0) throw std::domain_error("homogeneity_stat: R_n > 0 required");
    double sum = 0.0;
    for (auto v : field.u) sum += static_cast<double>(v) * static_cast<double>(v);
    return sum * field.grid_step * field.grid_step / static_cast<double>(field.r_n);
}

inline double homogeneity_stat(const TokenSeq& seq, double grid_step) {
    return homogeneity_stat(circular_field(seq, grid_step));
}

enum class ResampleMethod { permutation, parametric };

struct ScanResult {
    double theta_hat = 0.0;
    std::int64_t r_n = 0;
    double t_n = 0.0;
    double p_value = 1.0;
    double grid_step = 0.0;
    std::int64_t resamples = 0;
    ResampleMethod method = ResampleMethod::permutation;
};

/// Homogeneity scan: T_n plus a resampling p-value.  Permutation resamples
/// shuffle the observed tokens (exact under the i.i.d. null); parametric
/// resamples simulate fresh corpora at theta_hat.
inline ScanResult scan(const TokenSeq& seq, double grid_step, std::int64_t resamples,
                       ResampleMethod method, std::uint64_t seed, int workers = 1) {
    if (resamples < 199)
        throw std::invalid_argument("scan: at least 199 resamples required");
    ScanResult res;
    res.grid_step = grid_step;
    res.resamples = resamples;
    res.method = method;
    res.theta_hat = theta_hat(seq);
    res.r_n = distinct_count(seq);
    res.t_n = homogeneity_stat(seq, grid_step);

    std::vector<double> tvals(static_cast<std::size_t>(resamples));
    struct State {
        TokenSeq work;
        UField field;
        detail::WalkScratch ws;
        std::shared_ptr<PowerLawPmf> model;
    };
    const double th = res.theta_hat;
    detail::run_replications(
        resamples, workers, seed, /*stream=*/11,
        [&] {
            State st;
            if (method == ResampleMethod::parametric) st.model = std::make_shared<PowerLawPmf>(th);
            return st;
        },
        [&](std::int64_t r, Engine& eng, State& st) {
            if (method == ResampleMethod::permutation) {
                st.work.ids = seq.ids;
                st.work.vocab = seq.vocab;
                shuffle_vector(st.work.ids, eng);
            } else {
                st.work = tokens_from_labels(st.model->sample(eng, seq.n()));
            }
            circular_field(st.work, grid_step, st.field, st.ws);
            tvals[static_cast<std::size_t>(r)] = homogeneity_stat(st.field);
        });

    std::int64_t ge = 0;
    for (double t : tvals) ge += (t >= res.t_n);
    res.p_value = static_cast<double>(1 + ge) / static_cast<double>(1 + resamples);
    return res;
}

} // namespace urns
