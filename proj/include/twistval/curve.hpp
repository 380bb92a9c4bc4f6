#pragma once

// Elliptic curves over Q: L-series coefficients and the real period.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "arith.hpp"

namespace twistval {

class ConfigError : public Error {
public:
    using Error::Error;
};

struct CurveData {
    std::string label;
    std::array<i64, 5> ainvs{};  // a1, a2, a3, a4, a6
    u64 conductor = 1;
    int root_number = 1;
    std::map<u64, int> bad_primes;  // p | N -> a_p in {-1, 0, 1}
    double real_period = 0;         // Omega^+
    std::optional<double> imag_period;  // Omega^-; unused for even characters

    i64 a1() const { return ainvs[0]; }
    i64 a2() const { return ainvs[1]; }
    i64 a3() const { return ainvs[2]; }
    i64 a4() const { return ainvs[3]; }
    i64 a6() const { return ainvs[4]; }
    i64 b2() const { return a1() * a1() + 4 * a2(); }
    i64 b4() const { return 2 * a4() + a1() * a3(); }
    i64 b6() const { return a3() * a3() + 4 * a6(); }
    i64 b8() const {
        return a1() * a1() * a6() + 4 * a2() * a6() - a1() * a3() * a4() + a2() * a3() * a3() - a4() * a4();
    }
    i64 c4() const { return b2() * b2() - 24 * b4(); }
    i64 c6() const { return -b2() * b2() * b2() + 36 * b2() * b4() - 216 * b6(); }
    i128 discriminant() const {
        const i128 B2 = b2(), B4 = b4(), B6 = b6(), B8 = b8();
        return -B2 * B2 * B8 - 8 * B4 * B4 * B4 - 27 * B6 * B6 + 9 * B2 * B4 * B6;
    }

    bool is_bad(u64 p) const { return conductor % p == 0; }
};

/// Checks the structural invariants; throws ConfigError on violation.
inline void validate(const CurveData& e) {
    if (e.discriminant() == 0) throw ConfigError(e.label + ": singular Weierstrass model");
    if (e.root_number != 1 && e.root_number != -1) throw ConfigError(e.label + ": root number must be +1 or -1");
    if (e.conductor < 1) throw ConfigError(e.label + ": conductor must be positive");
    std::map<u64, int> expect;
    for (const auto& pp : factorize(e.conductor)) expect[pp.p] = 0;
    if (e.bad_primes.size() != expect.size()) throw ConfigError(e.label + ": bad_primes must list exactly the primes dividing N");
    for (const auto& [p, ap] : e.bad_primes) {
        if (!expect.count(p)) throw ConfigError(e.label + ": bad prime " + std::to_string(p) + " does not divide N");
        if (ap < -1 || ap > 1) throw ConfigError(e.label + ": bad-prime a_p must be in {-1, 0, 1}");
    }
    const i128 disc = e.discriminant();
    for (const auto& [p, ap] : e.bad_primes) {
        if (disc % static_cast<i128>(p) != 0) throw ConfigError(e.label + ": bad prime does not divide the discriminant");
    }
}

// ---------------------------------------------------------------------------
// Real period

namespace detail {

/// Real roots of 4x^3 + b2 x^2 + 2 b4 x + b6, descending.
inline std::vector<long double> real_two_torsion_roots(const CurveData& e) {
    const long double a = 4, b = e.b2(), c = 2.0L * e.b4(), d = e.b6();
    // Depressed cubic t^3 + P t + Q with x = t - b / (3a).
    const long double shift = b / (3 * a);
    const long double P = (3 * a * c - b * b) / (3 * a * a);
    const long double Q = (2 * b * b * b - 9 * a * b * c + 27 * a * a * d) / (27 * a * a * a);
    const long double disc = -(4 * P * P * P + 27 * Q * Q);
    std::vector<long double> roots;
    if (disc > 0) {
        const long double r = 2 * std::sqrt(-P / 3);
        const long double phi = std::acos(std::clamp<long double>(3 * Q / (P * r), -1, 1));
        for (int j = 0; j < 3; ++j) roots.push_back(r * std::cos((phi - 2 * std::numbers::pi_v<long double> * j) / 3) - shift);
    } else {
        const long double s = std::sqrt(std::max<long double>(Q * Q / 4 + P * P * P / 27, 0));
        roots.push_back(std::cbrt(-Q / 2 + s) + std::cbrt(-Q / 2 - s) - shift);
    }
    for (auto& x : roots) {
        for (int it = 0; it < 50; ++it) {
            const long double fx = ((a * x + b) * x + c) * x + d;
            const long double dfx = (3 * a * x + 2 * b) * x + c;
            if (dfx == 0) break;
            const long double step = fx / dfx;
            x -= step;
            if (std::fabs(step) <= 1e-19L * std::max<long double>(1, std::fabs(x))) break;
        }
    }
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
}

struct AgmResult {
    long double value;
    int iterations;
};

inline AgmResult agm(long double a, long double b, long double tol, int max_iter = 64) {
    for (int i = 0; i < max_iter; ++i) {
        if (std::fabs(a - b) <= tol * a) return {(a + b) / 2, i};
        const long double an = (a + b) / 2;
        b = std::sqrt(a * b);
        a = an;
    }
    throw Error("arithmetic-geometric mean did not converge");
}

}  // namespace detail

struct PeriodResult {
    double value = 0;
    int iterations = 0;
    int components = 1;
};

/// Omega^+ by AGM iteration on the real 2-torsion; doubled when E(R) has two components.
inline PeriodResult real_period_agm(const CurveData& e, double tol) {
    if (!(tol > 0)) throw Error("real_period: tolerance must be positive");
    const auto roots = detail::real_two_torsion_roots(e);
    const long double pi = std::numbers::pi_v<long double>;
    const long double t = tol;
    if (e.discriminant() > 0) {
        const long double e1 = roots[0], e2 = roots[1], e3 = roots[2];
        const auto m = detail::agm(std::sqrt(e1 - e3), std::sqrt(e1 - e2), t);
        return {static_cast<double>(2 * pi / m.value), m.iterations, 2};
    }
    const long double e1 = roots[0];
    const long double b = std::sqrt(3 * e1 * e1 + e.b2() * e1 / 2.0L + e.b4() / 2.0L);
    const long double a = 3 * e1 + e.b2() / 4.0L;
    const auto m = detail::agm(2 * std::sqrt(b), std::sqrt(2 * b + a), t);
    return {static_cast<double>(2 * pi / m.value), m.iterations, 1};
}

inline double real_period(const CurveData& e, double tol) { return real_period_agm(e, tol).value; }

// ---------------------------------------------------------------------------
// Fixtures and config files

namespace detail {

inline CurveData finish_curve(CurveData e) {
    validate(e);
    if (e.real_period <= 0) e.real_period = real_period(e, 1e-15);
    return e;
}

}  // namespace detail

/// Curve config schema:
///   { "label": "11a1", "ainvs": [a1, a2, a3, a4, a6], "conductor": 11,
///     "root_number": 1, "bad_primes": { "11": 1 } }
/// An optional "real_period" overrides the AGM value.
inline CurveData curve_from_json(const nlohmann::json& j) {
    try {
        CurveData e;
        e.label = j.at("label").get<std::string>();
        const auto a = j.at("ainvs").get<std::vector<i64>>();
        if (a.size() != 5) throw ConfigError("ainvs must have five entries");
        std::copy(a.begin(), a.end(), e.ainvs.begin());
        e.conductor = j.at("conductor").get<u64>();
        e.root_number = j.at("root_number").get<int>();
        for (const auto& [p, ap] : j.at("bad_primes").items()) e.bad_primes[std::stoull(p)] = ap.get<int>();
        if (j.contains("real_period")) e.real_period = j.at("real_period").get<double>();
        return detail::finish_curve(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("curve config: ") + ex.what());
    }
}

inline nlohmann::json curve_to_json(const CurveData& e) {
    nlohmann::json bad = nlohmann::json::object();
    for (const auto& [p, ap] : e.bad_primes) bad[std::to_string(p)] = ap;
    return {{"label", e.label}, {"ainvs", e.ainvs}, {"conductor", e.conductor}, {"root_number", e.root_number},
            {"bad_primes", bad}};
}

inline std::vector<std::string> fixture_names() { return {"11a1", "14a1"}; }

/// Bundled curves. Both have analytic rank 0 and root number +1.
inline CurveData curve_fixture(const std::string& name) {
    if (name == "11a1") {
        return detail::finish_curve({"11a1", {0, -1, 1, -10, -20}, 11, 1, {{11, 1}}, 0, std::nullopt});
    }
    if (name == "14a1") {
        return detail::finish_curve({"14a1", {1, 0, 1, 4, -6}, 14, 1, {{2, -1}, {7, 1}}, 0, std::nullopt});
    }
    throw ConfigError("unknown curve fixture '" + name + "' (bundled: 11a1, 14a1)");
}

/// A fixture name or a path to a JSON config.
inline CurveData load_curve(const std::string& name_or_path) {
    for (const auto& n : fixture_names()) {
        if (n == name_or_path) return curve_fixture(n);
    }
    std::ifstream in(name_or_path);
    if (!in) throw ConfigError("cannot open curve config '" + name_or_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError("curve config '" + name_or_path + "': " + ex.what());
    }
    return curve_from_json(j);
}

// ---------------------------------------------------------------------------
// Point counting

/// a_p = p + 1 - #E(F_p) by enumerating x (and y when p = 2).
inline i64 ap_naive(const CurveData& e, u64 p) {
    if (e.is_bad(p)) throw Error("ap: p = " + std::to_string(p) + " divides the conductor");
    const i64 P = static_cast<i64>(p);
    if (p == 2) {
        i64 count = 1;
        for (i64 x = 0; x < 2; ++x) {
            for (i64 y = 0; y < 2; ++y) {
                const i64 lhs = y * y + e.a1() * x * y + e.a3() * y;
                const i64 rhs = x * x * x + e.a2() * x * x + e.a4() * x + e.a6();
                if (mod_floor(lhs - rhs, 2) == 0) ++count;
            }
        }
        return P + 1 - count;
    }
    // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6 over F_p, p odd.
    std::vector<std::int8_t> chi(p, -1);
    chi[0] = 0;
    for (u64 y = 1; y <= p / 2; ++y) chi[y * y % p] = 1;
    const u64 b2 = mod_floor(e.b2(), p), b4 = mod_floor(2 * e.b4(), p), b6 = mod_floor(e.b6(), p);
    i64 sum = 0;
    for (u64 x = 0; x < p; ++x) {
        const u64 g = ((4 * x % p + b2) % p * x % p * x + b4 * x + b6) % p;
        sum += chi[g];
    }
    return -sum;
}

namespace detail {

/// Affine/projective point on y^2 = x^3 + A x + B over F_p (p >= 5).
struct ShortPoint {
    u64 x = 0, y = 0;
    bool inf = true;
};

class ShortCurve {
public:
    ShortCurve(u64 p, u64 A, u64 B) : p_(p), A_(A), B_(B) {}

    ShortPoint add(const ShortPoint& P, const ShortPoint& Q) const {
        if (P.inf) return Q;
        if (Q.inf) return P;
        u64 lambda;
        if (P.x == Q.x) {
            if ((P.y + Q.y) % p_ == 0) return {};
            const u64 num = (3 * mulmod(P.x, P.x, p_) + A_) % p_;
            lambda = mulmod(num, inv(2 * P.y % p_), p_);
        } else {
            lambda = mulmod((Q.y + p_ - P.y) % p_, inv((Q.x + p_ - P.x) % p_), p_);
        }
        const u64 x = (mulmod(lambda, lambda, p_) + 2 * p_ - P.x - Q.x) % p_;
        const u64 y = (mulmod(lambda, (P.x + p_ - x) % p_, p_) + p_ - P.y) % p_;
        return {x, y, false};
    }

    ShortPoint neg(const ShortPoint& P) const { return P.inf ? P : ShortPoint{P.x, (p_ - P.y) % p_, false}; }

    ShortPoint mul(ShortPoint P, u64 n) const {
        ShortPoint R{};
        while (n > 0) {
            if (n & 1) R = add(R, P);
            P = add(P, P);
            n >>= 1;
        }
        return R;
    }

    std::optional<ShortPoint> lift_x(u64 x) const {
        const u64 rhs = (mulmod(mulmod(x, x, p_), x, p_) + mulmod(A_, x, p_) + B_) % p_;
        const auto y = sqrt_mod(rhs);
        if (!y) return std::nullopt;
        return ShortPoint{x, *y, false};
    }

    u64 prime() const { return p_; }

private:
    u64 inv(u64 a) const { return powmod(a, p_ - 2, p_); }

    // Tonelli-Shanks.
    std::optional<u64> sqrt_mod(u64 a) const {
        if (a == 0) return 0;
        if (powmod(a, (p_ - 1) / 2, p_) != 1) return std::nullopt;
        u64 q = p_ - 1;
        int s = 0;
        while ((q & 1) == 0) {
            q >>= 1;
            ++s;
        }
        u64 z = 2;
        while (powmod(z, (p_ - 1) / 2, p_) != p_ - 1) ++z;
        u64 m = static_cast<u64>(s), c = powmod(z, q, p_), t = powmod(a, q, p_), r = powmod(a, (q + 1) / 2, p_);
        while (t != 1) {
            u64 i = 0, tt = t;
            while (tt != 1) {
                tt = mulmod(tt, tt, p_);
                ++i;
            }
            u64 b = c;
            for (u64 j = 0; j + 1 < m - i; ++j) b = mulmod(b, b, p_);
            m = i;
            c = mulmod(b, b, p_);
            t = mulmod(t, c, p_);
            r = mulmod(r, b, p_);
        }
        return r;
    }

    u64 p_, A_, B_;
};

/// All m in [lo, hi] with mP = O, by baby-step giant-step.
inline std::vector<u64> orders_in_interval(const ShortCurve& E, const ShortPoint& P, u64 lo, u64 hi) {
    const u64 width = hi - lo + 1;
    const u64 s = static_cast<u64>(std::ceil(std::sqrt(static_cast<double>(width)))) + 1;
    std::unordered_map<u64, u64> baby;  // x(jP) -> j, j in [1, s]
    ShortPoint jp = P;
    bool small_order = false;
    for (u64 j = 1; j <= s; ++j) {
        if (jp.inf || !baby.emplace(jp.x, j).second) {
            small_order = true;
            break;
        }
        jp = E.add(jp, P);
    }
    std::vector<u64> out;
    if (small_order) {
        // ord(P) <= 2s: find it directly and list its multiples.
        u64 ord = 1;
        for (ShortPoint R = P; !R.inf; R = E.add(R, P)) ++ord;
        for (u64 m = (lo + ord - 1) / ord * ord; m <= hi; m += ord) out.push_back(m);
        return out;
    }
    auto check = [&](u64 m) {
        if (m >= lo && m <= hi && E.mul(P, m).inf) out.push_back(m);
    };
    const ShortPoint step = E.mul(P, 2 * s);
    ShortPoint R = E.mul(P, lo + s);
    for (u64 base = lo + s; base <= hi + s; base += 2 * s) {
        // R = base * P; matches base +- j for |j| <= s.
        if (R.inf) check(base);
        else if (auto it = baby.find(R.x); it != baby.end()) {
            check(base - it->second);
            check(base + it->second);
        }
        R = E.add(R, step);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// a_p via group orders of random points (Mestre-style BSGS); nullopt if not pinned down.
inline std::optional<i64> ap_bsgs(const CurveData& e, u64 p, std::uint64_t seed = 1) {
    if (e.is_bad(p)) throw Error("ap: p = " + std::to_string(p) + " divides the conductor");
    if (p < 5) return std::nullopt;
    const u64 A = mod_floor(-27 * e.c4(), p);
    const u64 B = mod_floor(-54 * e.c6(), p);
    const detail::ShortCurve E(p, A, B);
    const u64 width = static_cast<u64>(std::floor(2 * std::sqrt(static_cast<double>(p))));
    const u64 lo = p + 1 - width, hi = p + 1 + width;
    std::mt19937_64 rng(seed ^ p);
    std::vector<u64> candidates;
    bool first = true;
    for (int tries = 0; tries < 40; ++tries) {
        const auto P = E.lift_x(rng() % p);
        if (!P) continue;
        auto ms = detail::orders_in_interval(E, *P, lo, hi);
        if (first) {
            candidates = std::move(ms);
            first = false;
        } else {
            std::vector<u64> keep;
            std::set_intersection(candidates.begin(), candidates.end(), ms.begin(), ms.end(), std::back_inserter(keep));
            candidates = std::move(keep);
        }
        if (candidates.size() == 1) return static_cast<i64>(p + 1) - static_cast<i64>(candidates[0]);
        if (candidates.empty()) return std::nullopt;
    }
    return std::nullopt;
}

/// Primes below this use naive enumeration; above it BSGS (with naive fallback).
inline constexpr u64 kDefaultPointCountCrossover = 2000;

inline i64 ap_good(const CurveData& e, u64 p, u64 crossover = kDefaultPointCountCrossover) {
    if (e.is_bad(p)) throw Error("ap: p = " + std::to_string(p) + " divides the conductor; use bad_primes");
    if (p >= crossover) {
        if (const auto a = ap_bsgs(e, p)) return *a;
    }
    return ap_naive(e, p);
}

// ---------------------------------------------------------------------------
// Coefficient table

struct CoefficientTable {
    std::string label;
    std::vector<i64> a;  // a[n] for 1 <= n <= T; a[0] unused

    u64 length() const { return a.empty() ? 0 : a.size() - 1; }
    i64 operator[](u64 n) const { return a[n]; }
};

/// a_1..a_T from point counts at good primes, bad-prime data, Hecke recursion and multiplicativity.
inline CoefficientTable coefficient_table(const CurveData& e, u64 T, unsigned jobs = 1,
                                          u64 crossover = kDefaultPointCountCrossover) {
    if (T < 1) throw Error("coefficient_table: length must be >= 1");
    CoefficientTable tab{e.label, std::vector<i64>(T + 1, 0)};
    const SpfSieve sieve(T);
    std::vector<u64> primes;
    for (u64 n = 2; n <= T; ++n) {
        if (sieve.is_prime(n)) primes.push_back(n);
    }
    std::vector<i64> ap(primes.size());
    auto work = [&](unsigned w, unsigned nw) {
        for (std::size_t i = w; i < primes.size(); i += nw) {
            const u64 p = primes[i];
            if (e.is_bad(p)) ap[i] = e.bad_primes.at(p);
            else ap[i] = ap_good(e, p, crossover);
        }
    };
    jobs = std::max(1u, jobs);
    if (jobs == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w, jobs);
        for (auto& t : pool) t.join();
    }
    auto& a = tab.a;
    a[1] = 1;
    for (std::size_t i = 0; i < primes.size(); ++i) {
        const u64 p = primes[i];
        const bool bad = e.is_bad(p);
        i64 prev2 = 1, prev = ap[i];
        a[p] = prev;
        for (u128 q = static_cast<u128>(p) * p; q <= T; q *= p) {
            const i64 next = bad ? prev * ap[i] : ap[i] * prev - static_cast<i64>(p) * prev2;
            a[static_cast<u64>(q)] = next;
            prev2 = prev;
            prev = next;
        }
    }
    for (u64 n = 2; n <= T; ++n) {
        const u64 p = sieve.spf(n);
        u64 q = p, m = n / p;
        while (m % p == 0) {
            m /= p;
            q *= p;
        }
        if (m != 1) a[n] = a[q] * a[m];
    }
    return tab;
}

}  // namespace twistval
