#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "twistval/lvalue.hpp"

using namespace twistval;

namespace {

struct Fixture {
    CurveData e;
    CoefficientTable tab;
    SeriesContext<double> ctx;
};

const Fixture& fixture(const std::string& name) {
    static std::map<std::string, Fixture> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        auto e = curve_fixture(name);
        auto tab = coefficient_table(e, 200000);
        SeriesContext<double> ctx(e, tab);
        it = cache.emplace(name, Fixture{e, tab, ctx}).first;
        it->second.ctx.curve = &it->second.e;
    }
    return it->second;
}

/// Direct summation of the series with per-term character values, in long double.
std::complex<long double> naive_L(const CurveData& e, const CoefficientTable& tab, const PrimitiveCharacter& chi, u64 T) {
    const long double f = chi.conductor();
    const long double c = 2 * std::numbers::pi_v<long double> / (f * std::sqrt(static_cast<long double>(e.conductor)));
    std::complex<long double> S = 0;
    for (u64 n = 1; n <= T; ++n) {
        S += static_cast<long double>(tab[n]) / static_cast<long double>(n) * chi.value<long double>(static_cast<i64>(n)) *
             std::exp(-c * static_cast<long double>(n));
    }
    const auto tau = gauss_sum<long double>(chi);
    const auto c_chi = chi.value<long double>(static_cast<i64>(e.conductor)) * tau * tau / f;
    return S + static_cast<long double>(e.root_number) * c_chi * std::conj(S);
}

std::vector<TwistRecord> records_for(const std::string& curve, u64 k, u64 max_f, int digits = 8,
                                     LambdaMode mode = LambdaMode::canonical) {
    const auto& fx = fixture(curve);
    std::vector<TwistRecord> out;
    for (u64 f = 2; f <= max_f; ++f) {
        const auto chars = characters_of_conductor(f, k);
        if (chars.empty() || std::gcd(f, fx.e.conductor) != 1) continue;
        const ConductorKernel<double> kernel(fx.ctx, f, digits);
        std::set<u64> seen;
        for (const auto& chi : chars) {
            if (!seen.insert(orbit_key(f, chi.label(), k)).second) continue;
            for (auto& r : orbit_records(kernel, fx.e, chi, mode)) out.push_back(r);
        }
    }
    return out;
}

std::map<u64, i64> A_by_conductor(const std::vector<TwistRecord>& recs) {
    std::map<u64, i64> m;
    for (const auto& r : recs) m[r.f] = r.A;
    return m;
}

bool is_golden_norm(i64 v) {
    v = std::abs(v);
    for (i64 a = -60; a <= 60; ++a) {
        for (i64 b = -60; b <= 60; ++b) {
            if (std::abs(a * a + a * b - b * b) == v) return true;
        }
    }
    return false;
}

}  // namespace

TEST(Truncation, TailBoundContract) {
    for (u64 f : {7ULL, 100ULL, 4999ULL}) {
        for (int d : {4, 8, 12}) {
            const u64 T = required_terms(f, 11, d);
            const double c = series_rate(f, 11);
            auto bound = [&](u64 t) { return 4 * std::exp(-c * static_cast<double>(t + 1)) / -std::expm1(-c); };
            EXPECT_LE(bound(T), std::pow(10.0, -d));
            EXPECT_GT(bound(T - 1), std::pow(10.0, -d) * 0.999);
        }
    }
    EXPECT_THROW(required_terms(7, 11, 0), Error);
}

TEST(Truncation, BudgetErrorNamesNeededTerms) {
    const auto e = curve_fixture("11a1");
    const auto tab = coefficient_table(e, 20);
    const SeriesContext<double> ctx(e, tab);
    const auto chi = characters_of_conductor(7, 3).front();
    try {
        central_value(ctx, chi, 8);
        FAIL() << "expected BudgetError";
    } catch (const BudgetError& err) {
        EXPECT_EQ(err.needed_terms, required_terms(7, 11, 8));
        EXPECT_NE(std::string(err.what()).find(std::to_string(err.needed_terms)), std::string::npos);
    }
}

TEST(CentralValue, MatchesDirectSummation) {
    for (const auto& name : fixture_names()) {
        const auto& fx = fixture(name);
        for (u64 f : {7ULL, 9ULL, 13ULL, 61ULL, 331ULL}) {
            if (std::gcd(f, fx.e.conductor) != 1) continue;
            for (const auto& chi : characters_of_conductor(f, 3)) {
                const auto cv = central_value(fx.ctx, chi, 10);
                const auto ref = naive_L(fx.e, fx.tab, chi, 2 * cv.terms);
                EXPECT_NEAR(cv.value.real(), static_cast<double>(ref.real()), 1e-10) << name << " f=" << f;
                EXPECT_NEAR(cv.value.imag(), static_cast<double>(ref.imag()), 1e-10) << name << " f=" << f;
            }
        }
        for (const auto& chi : characters_of_conductor(31, 5)) {
            const auto cv = central_value(fx.ctx, chi, 10);
            const auto ref = naive_L(fx.e, fx.tab, chi, 2 * cv.terms);
            EXPECT_LT(std::abs(cv.value - std::complex<double>(ref.real(), ref.imag())), 1e-10);
        }
    }
}

TEST(CentralValue, DoublingTermsChangesLittle) {
    const auto& fx = fixture("14a1");
    for (const auto& chi : characters_of_conductor(79, 3)) {
        const auto cv = central_value(fx.ctx, chi, 8);
        const auto twice = naive_L(fx.e, fx.tab, chi, 2 * cv.terms);
        EXPECT_LT(std::abs(cv.value - std::complex<double>(twice.real(), twice.imag())), 1e-8);
    }
}

TEST(CentralValue, ConjugationSymmetry) {
    const auto& fx = fixture("11a1");
    for (u64 f : {7ULL, 13ULL, 31ULL, 41ULL}) {
        for (u64 k : {3ULL, 5ULL}) {
            for (const auto& chi : characters_of_conductor(f, k)) {
                const auto a = central_value(fx.ctx, chi, 8).value;
                const auto b = central_value(fx.ctx, chi.conj(), 8).value;
                EXPECT_LT(std::abs(a - std::conj(b)), 1e-8);
            }
        }
    }
}

TEST(CentralValue, DoubleAndExtendedAgree) {
    const auto& fx = fixture("11a1");
    const SeriesContext<long double> wide(fx.e, fx.tab);
    int n = 0;
    for (u64 f = 7; f <= 400 && n < 100; ++f) {
        if (std::gcd(f, fx.e.conductor) != 1) continue;
        for (const auto& chi : characters_of_conductor(f, 3)) {
            const auto a = central_value(fx.ctx, chi, 8).value;
            const auto b = central_value(wide, chi, 8).value;
            EXPECT_LT(std::abs(a - b), 1e-11) << "f=" << f;
            ++n;
        }
    }
    EXPECT_GE(n, 100);
}

TEST(AlgebraicPart, ZeroAndEvenOrder) {
    const auto& fx = fixture("11a1");
    const auto chi = characters_of_conductor(7, 3).front();
    EXPECT_EQ(algebraic_part(fx.e, chi, {0, 0}), std::complex<double>(0, 0));
    const auto quartic = characters_of_conductor(5, 4).front();
    EXPECT_THROW(algebraic_part(fx.e, quartic, {1, 0}), UnsupportedCase);
}

TEST(AlgebraicPart, IntegralAtConductorSeven) {
    const auto recs = records_for("11a1", 3, 7);
    ASSERT_EQ(recs.size(), 2u);
    for (const auto& r : recs) {
        EXPECT_LT(r.residual, kIntegralityTolerance);
        EXPECT_EQ(r.A, 10);
    }
}

TEST(AlgebraicPart, ReflectionIdentityOnSample) {
    int n = 0;
    for (const auto& name : fixture_names()) {
        for (const auto& r : records_for(name, 3, 700)) {
            if (std::abs(r.L_alg) < kZeroThreshold) continue;
            EXPECT_LT(reflection_residual(r), 1e-8) << name << " f=" << r.f;
            ++n;
        }
    }
    EXPECT_GE(n, 100);
}

TEST(Lambda, Branches) {
    const auto& fx = fixture("11a1");
    for (u64 f : {7ULL, 13ULL, 19ULL, 31ULL, 37ULL, 43ULL}) {
        for (const auto& chi : characters_of_conductor(f, 3)) {
            const auto lc = lambda_select(fx.e, chi);
            EXPECT_NE(lc.kind, LambdaCase::minus_one);
            const auto zeta = PrimitiveCharacter::root_of_unity<double>(lc.zeta_exp, 6);
            EXPECT_LT(std::abs(lc.lambda - zeta * std::conj(lc.lambda)), 1e-14);
            if (lc.kind == LambdaCase::plus_one) {
                EXPECT_EQ(lc.lambda, std::complex<double>(1, 0));
            }
            if (lc.kind == LambdaCase::generic) {
                EXPECT_LT(std::abs(lc.lambda - 1.0 / (1.0 + std::conj(zeta))), 1e-14);
                EXPECT_LT(std::abs(lc.lambda / std::conj(lc.lambda) - zeta), 1e-14);
            }
        }
    }
}

TEST(Lambda, MinusOneBranch) {
    auto e = curve_fixture("11a1");
    e.root_number = -1;
    int hits = 0;
    for (u64 f = 7; f < 200; ++f) {
        if (f % 11 == 0) continue;
        for (const auto& chi : characters_of_conductor(f, 3)) {
            const auto lc = lambda_select(e, chi);
            if (lc.kind != LambdaCase::minus_one) continue;
            ++hits;
            const u64 c = full_order_witness(chi);
            EXPECT_GE(c, 2u);
            for (u64 d = 2; d < c; ++d) {
                const auto m = chi.exponent(static_cast<i64>(d));
                EXPECT_TRUE(!m || std::gcd(*m, u64{3}) != 1);
            }
            EXPECT_LT(std::abs(lc.lambda + std::conj(lc.lambda)), 1e-14);
        }
    }
    EXPECT_GT(hits, 0);
}

TEST(Lambda, AlternativeNeedsOddOrderAndPositiveSign) {
    auto e = curve_fixture("11a1");
    e.root_number = -1;
    EXPECT_THROW(lambda_select(e, characters_of_conductor(7, 3).front(), LambdaMode::alternative), UnsupportedCase);
    EXPECT_THROW(lambda_select(e, characters_of_conductor(7, 2).front()), Error);
}

TEST(Norm, CubicValuesAndConjugates) {
    const auto m11 = A_by_conductor(records_for("11a1", 3, 31));
    EXPECT_EQ(m11.at(7), 10);
    EXPECT_EQ(m11.at(13), -20);
    EXPECT_EQ(m11.at(19), -20);
    EXPECT_EQ(m11.at(31), 10);
    const auto m14 = A_by_conductor(records_for("14a1", 3, 31));
    EXPECT_EQ(m14.at(13), -6);
    EXPECT_EQ(m14.at(19), -12);
    EXPECT_EQ(m14.at(31), 0);
    const auto recs = records_for("11a1", 3, 300);
    for (std::size_t i = 0; i + 1 < recs.size(); i += 2) {
        ASSERT_EQ(recs[i].f, recs[i + 1].f);
        EXPECT_NEAR(recs[i].alpha, recs[i + 1].alpha, 1e-6);
        EXPECT_EQ(recs[i].A, static_cast<i64>(std::llround(recs[i].alpha)));
    }
}

TEST(Norm, QuinticValuesLieInGoldenNormSet) {
    const auto recs = records_for("11a1", 5, 61);
    const auto m = A_by_conductor(recs);
    EXPECT_EQ(m.at(31), -500);
    EXPECT_EQ(m.at(41), 100);
    EXPECT_EQ(m.at(61), -1900);
    std::vector<i64> vals;
    for (const auto& r : recs) vals.push_back(r.A);
    const i64 g = nonzero_gcd(vals);
    EXPECT_GT(g, 1);
    for (i64 a : vals) EXPECT_TRUE(is_golden_norm(a / g)) << a;
}

TEST(Norm, OrbitConsistencyAndIntegrality) {
    for (const auto& name : fixture_names()) {
        for (u64 k : {3ULL, 5ULL, 7ULL}) {
            const auto recs = records_for(name, k, k == 3 ? 400 : 250);
            std::map<std::pair<u64, u64>, std::vector<const TwistRecord*>> orbits;
            for (const auto& r : recs) orbits[{r.f, orbit_key(r.f, r.label, k)}].push_back(&r);
            for (const auto& [key, members] : orbits) {
                EXPECT_EQ(members.size(), euler_phi(k));
                for (const auto* r : members) {
                    EXPECT_EQ(r->A, members.front()->A);
                    EXPECT_NEAR(r->pre_round, members.front()->pre_round, 1e-6 * std::max(1.0, std::abs(r->pre_round)));
                    EXPECT_TRUE(r->reliable()) << name << " k=" << k << " f=" << r->f << " residual=" << r->residual;
                }
            }
        }
    }
}

TEST(Norm, AlternativeLambdaPreservesAbsoluteNorm) {
    for (u64 k : {3ULL, 5ULL, 7ULL}) {
        const auto a = records_for("11a1", k, k == 3 ? 300 : 200);
        const auto b = records_for("11a1", k, k == 3 ? 300 : 200, 8, LambdaMode::alternative);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(std::abs(a[i].A), std::abs(b[i].A)) << "k=" << k << " f=" << a[i].f;
            EXPECT_LT(b[i].residual, kIntegralityTolerance);
        }
    }
}

TEST(Norm, ZeroSetConsistency) {
    int zeros = 0;
    for (const auto& name : fixture_names()) {
        for (const auto& r : records_for(name, 3, 1500)) {
            EXPECT_FALSE(r.zero_mismatch) << name << " f=" << r.f;
            if (r.A == 0) {
                ++zeros;
                EXPECT_LT(std::abs(r.L), kZeroThreshold);
            }
        }
    }
    EXPECT_GT(zeros, 0);
}

TEST(Normalize, GcdArithmetic) {
    std::vector<TwistRecord> recs(4);
    const i64 vals[] = {0, 5, -10, 25};
    for (int i = 0; i < 4; ++i) recs[i].A = vals[i];
    EXPECT_EQ(dataset_gcd_normalize(recs), 5);
    EXPECT_EQ(recs[0].A, 0);
    EXPECT_EQ(recs[1].A, 1);
    EXPECT_EQ(recs[2].A, -2);
    EXPECT_EQ(recs[3].A, 5);
    EXPECT_EQ(dataset_gcd_normalize(recs), 1);
    std::vector<TwistRecord> zeros(3);
    EXPECT_THROW(dataset_gcd_normalize(zeros), Error);
}

TEST(RootNumber, FixturesArePlusOne) {
    for (const auto& name : fixture_names()) {
        const auto& fx = fixture(name);
        const auto trivial = detect_root_number(fx.e, fx.tab);
        EXPECT_EQ(trivial.w, 1) << name;
        const auto twisted = detect_root_number(fx.e, fx.tab, characters_of_conductor(13, 3).front());
        EXPECT_EQ(twisted.w, 1) << name;
        EXPECT_GT(trivial.defect_minus, 1e-4);
    }
}

TEST(RootNumber, RankOneCurveIsMinusOne) {
    CurveData e{"37a1", {0, 0, 1, -1, 0}, 37, -1, {{37, -1}}, 0, std::nullopt};
    e.real_period = real_period(e, 1e-15);
    const auto tab = coefficient_table(e, 5000);
    EXPECT_EQ(detect_root_number(e, tab).w, -1);
}
