#pragma once

// Counters n(x; l), s(x; L), m(x; c) over a conductor grid, and their comparator ratios.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "format.hpp"
#include "lvalue.hpp"
#include "model.hpp"

namespace twistval {

/// |a^2 + ab - b^2| = n has a solution iff every prime p = 2, 3 mod 5 divides n to an even power.
inline bool is_golden_norm_value(u64 n) {
    if (n == 0) return true;
    for (const auto& pp : factorize(n)) {
        const u64 r = pp.p % 5;
        if ((r == 2 || r == 3) && pp.b % 2 != 0) return false;
    }
    return true;
}

struct StatConfig {
    std::vector<i64> values;       // l for n(x; l); 0 counts vanishings
    std::vector<i64> thresholds;   // L for s(x; L)
    std::vector<double> exponents; // c for m(x; c)
    double grid_start = 2;
    double grid_ratio = 1.05;
    double grid_end = 0;  // 0: largest conductor seen

    /// Default value sets for the ratio plots.
    static StatConfig defaults(u64 k) {
        StatConfig c;
        std::vector<i64> mags;
        if (k == 5) mags = {1, 4, 5, 9, 11, 16, 19, 20, 25};
        else for (i64 l = 1; l <= 9; ++l) mags.push_back(l);
        c.values.push_back(0);
        for (i64 m : mags) {
            c.values.push_back(m);
            c.values.push_back(-m);
        }
        c.thresholds = mags;
        const double top = static_cast<double>(euler_phi(k)) / 4;
        for (int i = 1; i / 10.0 <= top + 1e-9; ++i) c.exponents.push_back(i / 10.0);
        return c;
    }
};

struct StatSeries {
    std::string curve;
    u64 k = 0;
    StatConfig config;
    std::vector<double> grid;
    std::vector<std::vector<u64>> n;         // [value][grid]
    std::vector<std::vector<u64>> s;         // [threshold][grid]
    std::vector<std::vector<u64>> m;         // [exponent][grid], A = 0 included
    std::vector<std::vector<u64>> m_strict;  // [exponent][grid], 0 < |A| only
    std::vector<u64> total;                  // characters with f <= x
};

/// Single-pass fold over (f, A) pairs from one (curve, k) dataset; partial accumulators merge associatively.
class StatAccumulator {
public:
    StatAccumulator(std::string curve, u64 k) : curve_(std::move(curve)), k_(k) {}

    void add(const std::string& curve, const TwistRecord& r) {
        if (curve != curve_) throw Error("stats: mixed curves in one stream (" + curve_ + ", " + curve + ")");
        if (r.k != k_) throw Error("stats: mixed orders in one stream");
        items_.push_back({r.f, r.A});
    }

    void merge(const StatAccumulator& other) {
        if (other.curve_ != curve_ || other.k_ != k_) throw Error("stats: cannot merge different datasets");
        items_.insert(items_.end(), other.items_.begin(), other.items_.end());
    }

    StatSeries finish(const StatConfig& cfg) const {
        StatSeries out;
        out.curve = curve_;
        out.k = k_;
        out.config = cfg;
        auto items = items_;
        std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.f < b.f; });
        double end = cfg.grid_end;
        if (end <= 0) end = items.empty() ? cfg.grid_start : static_cast<double>(items.back().f);
        if (!(cfg.grid_start > 1) || !(cfg.grid_ratio > 1)) throw Error("stats: grid must start above 1 with ratio > 1");
        for (double x = cfg.grid_start; x < end; x *= cfg.grid_ratio) out.grid.push_back(x);
        out.grid.push_back(std::max(end, cfg.grid_start));
        const std::size_t G = out.grid.size();
        out.n.assign(cfg.values.size(), std::vector<u64>(G, 0));
        out.s.assign(cfg.thresholds.size(), std::vector<u64>(G, 0));
        out.m.assign(cfg.exponents.size(), std::vector<u64>(G, 0));
        out.m_strict.assign(cfg.exponents.size(), std::vector<u64>(G, 0));
        out.total.assign(G, 0);
        std::vector<u64> n(cfg.values.size()), s(cfg.thresholds.size()), m(cfg.exponents.size()),
            ms(cfg.exponents.size());
        u64 total = 0;
        std::size_t i = 0;
        for (std::size_t g = 0; g < G; ++g) {
            while (i < items.size() && static_cast<double>(items[i].f) <= out.grid[g]) {
                const auto& it = items[i++];
                ++total;
                const i64 a = it.A < 0 ? -it.A : it.A;
                for (std::size_t v = 0; v < cfg.values.size(); ++v) n[v] += it.A == cfg.values[v] ? 1 : 0;
                for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) s[t] += (a > 0 && a <= cfg.thresholds[t]) ? 1 : 0;
                for (std::size_t e = 0; e < cfg.exponents.size(); ++e) {
                    const bool in = static_cast<double>(a) <= std::pow(static_cast<double>(it.f), cfg.exponents[e]);
                    m[e] += in ? 1 : 0;
                    ms[e] += (in && a > 0) ? 1 : 0;
                }
            }
            for (std::size_t v = 0; v < n.size(); ++v) out.n[v][g] = n[v];
            for (std::size_t t = 0; t < s.size(); ++t) out.s[t][g] = s[t];
            for (std::size_t e = 0; e < m.size(); ++e) {
                out.m[e][g] = m[e];
                out.m_strict[e][g] = ms[e];
            }
            out.total[g] = total;
        }
        return out;
    }

private:
    struct Item {
        u64 f;
        i64 A;
    };
    std::string curve_;
    u64 k_;
    std::vector<Item> items_;
};

inline StatSeries accumulate(const std::string& curve, u64 k, const std::vector<TwistRecord>& records,
                             const StatConfig& cfg) {
    StatAccumulator acc(curve, k);
    for (const auto& r : records) acc.add(curve, r);
    return acc.finish(cfg);
}

// ---------------------------------------------------------------------------
// Ratios

/// Comparator for n(x; l): the vanishing comparator at l = 0, the small-value one otherwise. NaN when unsupported.
inline double value_comparator(const std::string& curve, u64 k, i64 l, double x) {
    try {
        return comparator(l == 0 ? ComparatorKind::vanishing : ComparatorKind::small_value, curve, k, x);
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline double safe_comparator(ComparatorKind kind, const std::string& curve, u64 k, double x, double c = 0) {
    try {
        return comparator(kind, curve, k, x, c);
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

struct RatioRow {
    double x = 0;
    double param = 0;  // l, L or c
    u64 count = 0;
    u64 count_strict = 0;  // m family only
    double comparator = 0;
    double ratio = 0;
    double ratio_strict = 0;
};

enum class CounterFamily { n, s, m };

inline std::string to_string(CounterFamily f) {
    switch (f) {
        case CounterFamily::n: return "n";
        case CounterFamily::s: return "s";
        case CounterFamily::m: return "m";
    }
    return "n";
}

/// Counter divided by its comparator at every grid point, one block per configured parameter.
inline std::vector<RatioRow> ratio_series(const StatSeries& st, CounterFamily fam) {
    std::vector<RatioRow> rows;
    auto push = [&](double x, double param, u64 count, u64 strict, double comp) {
        RatioRow r{x, param, count, strict, comp, static_cast<double>(count) / comp, static_cast<double>(strict) / comp};
        rows.push_back(r);
    };
    switch (fam) {
        case CounterFamily::n:
            for (std::size_t v = 0; v < st.config.values.size(); ++v) {
                const i64 l = st.config.values[v];
                for (std::size_t g = 0; g < st.grid.size(); ++g)
                    push(st.grid[g], static_cast<double>(l), st.n[v][g], 0, value_comparator(st.curve, st.k, l, st.grid[g]));
            }
            break;
        case CounterFamily::s:
            for (std::size_t t = 0; t < st.config.thresholds.size(); ++t) {
                for (std::size_t g = 0; g < st.grid.size(); ++g)
                    push(st.grid[g], static_cast<double>(st.config.thresholds[t]), st.s[t][g], 0,
                         safe_comparator(ComparatorKind::small_value, st.curve, st.k, st.grid[g]));
            }
            break;
        case CounterFamily::m:
            for (std::size_t e = 0; e < st.config.exponents.size(); ++e) {
                const double c = st.config.exponents[e];
                for (std::size_t g = 0; g < st.grid.size(); ++g)
                    push(st.grid[g], c, st.m[e][g], st.m_strict[e][g],
                         safe_comparator(ComparatorKind::m_ratio, st.curve, st.k, st.grid[g], c));
            }
            break;
    }
    return rows;
}

/// Long-format CSV. Headers:
///   n: curve,k,x,l,count,comparator,ratio
///   s: curve,k,x,L,count,comparator,ratio
///   m: curve,k,x,c,count,count_strict,comparator,ratio,ratio_strict
inline void write_ratio_csv(std::ostream& os, const StatSeries& st, CounterFamily fam) {
    const auto rows = ratio_series(st, fam);
    switch (fam) {
        case CounterFamily::n: os << "curve,k,x,l,count,comparator,ratio\n"; break;
        case CounterFamily::s: os << "curve,k,x,L,count,comparator,ratio\n"; break;
        case CounterFamily::m: os << "curve,k,x,c,count,count_strict,comparator,ratio,ratio_strict\n"; break;
    }
    for (const auto& r : rows) {
        os << st.curve << ',' << st.k << ',' << format_double(r.x) << ',';
        if (fam == CounterFamily::m) os << format_double(r.param);
        else os << static_cast<i64>(r.param);
        os << ',' << r.count << ',';
        if (fam == CounterFamily::m) os << r.count_strict << ',';
        os << format_double(r.comparator) << ',' << format_double(r.ratio);
        if (fam == CounterFamily::m) os << ',' << format_double(r.ratio_strict);
        os << '\n';
    }
}

/// max/min of n(x; l)/g_k(x) over grid points in the last half of the range; infinity if a count is zero there.
inline double stability_band(const StatSeries& st, i64 l) {
    const auto it = std::find(st.config.values.begin(), st.config.values.end(), l);
    if (it == st.config.values.end()) throw Error("stability_band: value not tracked");
    const std::size_t v = static_cast<std::size_t>(it - st.config.values.begin());
    const double end = st.grid.back();
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (std::size_t g = 0; g < st.grid.size(); ++g) {
        if (st.grid[g] < end / 2) continue;
        const double r = static_cast<double>(st.n[v][g]) / comparator(ComparatorKind::small_value, st.curve, st.k, st.grid[g]);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (lo <= 0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace twistval
