#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "twistval/stats.hpp"

using namespace twistval;

namespace {

TwistRecord rec(u64 f, i64 A, u64 k = 3) {
    TwistRecord r;
    r.f = f;
    r.k = k;
    r.A = A;
    return r;
}

std::vector<TwistRecord> synthetic(std::size_t n, u64 seed) {
    std::mt19937_64 rng(seed);
    std::vector<TwistRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const u64 f = 7 + rng() % 50000;
        const i64 A = static_cast<i64>(rng() % 41) - 20;
        out.push_back(rec(f, rng() % 4 == 0 ? 0 : A));
    }
    return out;
}

bool brute_golden(u64 n) {
    for (i64 a = -80; a <= 80; ++a) {
        for (i64 b = -80; b <= 80; ++b) {
            if (static_cast<u64>(std::abs(a * a + a * b - b * b)) == n) return true;
        }
    }
    return false;
}

}  // namespace

TEST(NormSet, MatchesBruteForce) {
    for (u64 n = 1; n <= 2000; ++n) EXPECT_EQ(is_golden_norm_value(n), brute_golden(n)) << n;
    std::vector<u64> first;
    for (u64 n = 1; first.size() < 9; ++n) {
        if (is_golden_norm_value(n)) first.push_back(n);
    }
    EXPECT_EQ(first, (std::vector<u64>{1, 4, 5, 9, 11, 16, 19, 20, 25}));
}

TEST(Accumulate, EmptyStream) {
    const auto st = accumulate("11a1", 3, {}, StatConfig::defaults(3));
    for (const auto& row : st.n) for (u64 c : row) EXPECT_EQ(c, 0u);
    for (const auto& row : st.s) for (u64 c : row) EXPECT_EQ(c, 0u);
    for (const auto& row : st.m) for (u64 c : row) EXPECT_EQ(c, 0u);
}

TEST(Accumulate, SingleRecord) {
    auto cfg = StatConfig::defaults(3);
    cfg.exponents.insert(cfg.exponents.begin(), 0.0);
    cfg.grid_end = 100;
    const auto st = accumulate("11a1", 3, {rec(7, 1)}, cfg);
    const std::size_t v1 = 1;  // values = {0, 1, -1, ...}
    ASSERT_EQ(cfg.values[v1], 1);
    for (std::size_t g = 0; g < st.grid.size(); ++g) {
        const u64 expect = st.grid[g] >= 7 ? 1 : 0;
        EXPECT_EQ(st.n[v1][g], expect);
        EXPECT_EQ(st.s[0][g], expect);
        for (std::size_t e = 0; e < cfg.exponents.size(); ++e) EXPECT_EQ(st.m[e][g], expect);
    }
}

TEST(Accumulate, RecountOracleAndIdentities) {
    const auto recs = synthetic(10000, 3);
    auto cfg = StatConfig::defaults(3);
    const auto st = accumulate("11a1", 3, recs, cfg);
    for (std::size_t g = 0; g < st.grid.size(); g += 7) {
        const double x = st.grid[g];
        for (std::size_t v = 0; v < cfg.values.size(); ++v) {
            u64 c = 0;
            for (const auto& r : recs) c += (static_cast<double>(r.f) <= x && r.A == cfg.values[v]) ? 1 : 0;
            EXPECT_EQ(st.n[v][g], c);
        }
        for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
            u64 from_n = 0;
            for (std::size_t v = 0; v < cfg.values.size(); ++v) {
                const i64 l = cfg.values[v];
                if (l != 0 && std::abs(l) <= cfg.thresholds[t]) from_n += st.n[v][g];
            }
            EXPECT_EQ(st.s[t][g], from_n);
        }
        for (std::size_t e = 0; e < cfg.exponents.size(); ++e) {
            u64 c = 0;
            for (const auto& r : recs) {
                c += (static_cast<double>(r.f) <= x && std::abs(r.A) <= std::pow(static_cast<double>(r.f), cfg.exponents[e])) ? 1 : 0;
            }
            EXPECT_EQ(st.m[e][g], c);
            if (e > 0) {
                EXPECT_GE(st.m[e][g], st.m[e - 1][g]);
            }
            EXPECT_LE(st.m_strict[e][g], st.m[e][g]);
        }
    }
    for (std::size_t g = 1; g < st.grid.size(); ++g) {
        for (const auto& row : st.n) EXPECT_GE(row[g], row[g - 1]);
        EXPECT_GE(st.total[g], st.total[g - 1]);
    }
    EXPECT_EQ(st.total.back(), recs.size());
}

TEST(Accumulate, MergeIsAssociative) {
    const auto recs = synthetic(3000, 11);
    const auto cfg = StatConfig::defaults(3);
    StatAccumulator a("14a1", 3), b("14a1", 3), whole("14a1", 3);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        (i % 3 == 0 ? a : b).add("14a1", recs[i]);
        whole.add("14a1", recs[i]);
    }
    a.merge(b);
    const auto x = a.finish(cfg), y = whole.finish(cfg);
    EXPECT_EQ(x.n, y.n);
    EXPECT_EQ(x.s, y.s);
    EXPECT_EQ(x.m, y.m);
}

TEST(Accumulate, RejectsMixedStreams) {
    StatAccumulator acc("11a1", 3);
    EXPECT_THROW(acc.add("14a1", rec(7, 1)), Error);
    EXPECT_THROW(acc.add("11a1", rec(11, 1, 5)), Error);
    StatAccumulator other("11a1", 5);
    EXPECT_THROW(acc.merge(other), Error);
}

TEST(Ratios, ConstantCounterDecays) {
    auto cfg = StatConfig::defaults(3);
    cfg.grid_end = 1e4;
    const auto st = accumulate("11a1", 3, {rec(7, 1)}, cfg);
    const auto rows = ratio_series(st, CounterFamily::n);
    for (const auto& r : rows) {
        if (r.param == 1 && r.x >= 7) {
            EXPECT_NEAR(r.ratio, 1 / std::sqrt(r.x), 1e-15);
        }
        if (r.param == 0) {
            EXPECT_NEAR(r.comparator, comparator(ComparatorKind::vanishing, "11a1", 3, r.x), 1e-12);
        }
    }
}

TEST(Ratios, ThresholdRatiosMonotoneInL) {
    const auto recs = synthetic(5000, 5);
    const auto st = accumulate("11a1", 3, recs, StatConfig::defaults(3));
    const auto rows = ratio_series(st, CounterFamily::s);
    const std::size_t G = st.grid.size();
    for (std::size_t t = 1; t < st.config.thresholds.size(); ++t) {
        for (std::size_t g = 0; g < G; ++g) EXPECT_GE(rows[t * G + g].ratio, rows[(t - 1) * G + g].ratio);
    }
}

TEST(Ratios, CsvHeaders) {
    const auto st = accumulate("11a1", 3, synthetic(100, 1), StatConfig::defaults(3));
    std::ostringstream n, s, m;
    write_ratio_csv(n, st, CounterFamily::n);
    write_ratio_csv(s, st, CounterFamily::s);
    write_ratio_csv(m, st, CounterFamily::m);
    EXPECT_EQ(n.str().substr(0, n.str().find('\n')), "curve,k,x,l,count,comparator,ratio");
    EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "curve,k,x,L,count,comparator,ratio");
    EXPECT_EQ(m.str().substr(0, m.str().find('\n')), "curve,k,x,c,count,count_strict,comparator,ratio,ratio_strict");
    const std::string body = n.str();
    const auto lines = std::count(body.begin(), body.end(), '\n');
    EXPECT_EQ(static_cast<std::size_t>(lines), 1 + st.grid.size() * st.config.values.size());
}

TEST(Ratios, UnsupportedComparatorIsNan) {
    auto cfg = StatConfig::defaults(7);
    const auto st = accumulate("11a1", 7, {rec(29, 1, 7)}, cfg);
    for (const auto& r : ratio_series(st, CounterFamily::s)) EXPECT_TRUE(std::isnan(r.ratio));
    std::ostringstream os;
    write_ratio_csv(os, st, CounterFamily::s);
    EXPECT_NE(os.str().find("nan"), std::string::npos);
}

TEST(Ratios, DefaultExponentGrid) {
    EXPECT_EQ(StatConfig::defaults(3).exponents.size(), 5u);
    EXPECT_EQ(StatConfig::defaults(5).exponents.size(), 10u);
    EXPECT_EQ(StatConfig::defaults(5).thresholds, (std::vector<i64>{1, 4, 5, 9, 11, 16, 19, 20, 25}));
}

TEST(Stability, BandOfSquareRootGrowth) {
    std::vector<TwistRecord> recs;
    for (u64 f = 1; f <= 400; ++f) recs.push_back(rec(f * f, 1));  // n(x; 1) ~ sqrt(x)
    auto cfg = StatConfig::defaults(3);
    const auto st = accumulate("11a1", 3, recs, cfg);
    EXPECT_LT(stability_band(st, 1), 1.2);
    EXPECT_EQ(stability_band(st, -1), std::numeric_limits<double>::infinity());
    EXPECT_THROW(stability_band(st, 77), Error);
}
