#pragma once

// Volume heuristics for small nonzero values of A and the growth they predict.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "arith.hpp"
#include "characters.hpp"

namespace twistval {

/// P_m(x) = sum_{j <= m} x^j / j!.
inline double taylor_exp_poly(int m, double x) {
    if (m < 0) throw Error("taylor_exp_poly: degree must be >= 0");
    double term = 1, sum = 1;
    for (int j = 1; j <= m; ++j) {
        term *= x / j;
        sum += term;
    }
    return sum;
}

/// Box [-M, M]^n and the sub-region |x_1 ... x_n| <= L.
struct RegionSpec {
    int n = 1;
    double M = 1;
    double L = 1;

    double C() const { return L / std::pow(M, n); }

    static RegionSpec from_ratio(int n, double C) { return {n, 1.0, C}; }

    void check() const {
        if (n < 1) throw Error("region dimension must be >= 1");
        if (!(M > 0) || !(L > 0)) throw Error("region bounds must be positive");
        if (C() > 1 + 1e-12) throw Error("region requires L <= M^n");
    }
};

/// mu(T) / mu(R) = C * P_{n-1}(-log C).
inline double volume_ratio(const RegionSpec& r) {
    r.check();
    const double C = std::min(1.0, r.C());
    return C * taylor_exp_poly(r.n - 1, -std::log(C));
}

/// Leading term L n^{n-1} log^{n-1}(M) / ((n-1)! M^n); meaningful for large M.
inline double volume_ratio_asymptotic(const RegionSpec& r) {
    double v = r.L / std::pow(r.M, r.n);
    for (int j = 1; j < r.n; ++j) v *= r.n * std::log(r.M) / j;
    return v;
}

struct SmallValueProbability {
    double value = 0;
    bool clamped = false;  // L > M^n; probability set to 1
};

/// Model probability that 0 < |A| <= L for a character of order k and conductor f, with M = f^{1/2}.
inline SmallValueProbability prob_small_checked(u64 f, u64 k, double L) {
    if (f < 2) throw Error("prob_small: conductor must be >= 2");
    if (!(L > 0)) throw Error("prob_small: bound must be positive");
    const int n = static_cast<int>(euler_phi(k) / 2);
    if (n < 1) throw Error("prob_small: order must be >= 3");
    RegionSpec r{n, std::sqrt(static_cast<double>(f)), L};
    if (r.C() >= 1) return {1.0, true};
    return {volume_ratio(r), false};
}

inline double prob_small(u64 f, u64 k, double L) { return prob_small_checked(f, k, L).value; }

// ---------------------------------------------------------------------------
// Growth prediction

enum class Regime { bounded, log_power, power };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::bounded: return "bounded";
        case Regime::log_power: return "log_power";
        case Regime::power: return "power";
    }
    return "bounded";
}

struct ModelParams {
    u64 k = 3;
    double c = 0;  // L = f^c; c = 0 means a fixed bound
    double X = 1e6;
    u64 N = 1;

    int n() const { return static_cast<int>(euler_phi(k) / 2); }
    int B() const { return static_cast<int>(sigma0(k)) + static_cast<int>(euler_phi(k) / 2) - 3; }
    /// phi(k)/4 - c.
    double decay() const { return static_cast<double>(euler_phi(k)) / 4 - c; }

    void check() const {
        if (k < 3) throw Error("model: order must be >= 3");
        if (c < 0 || c > static_cast<double>(euler_phi(k)) / 4) throw Error("model: need 0 <= c <= phi(k)/4");
        if (!(X > 1)) throw Error("model: X must exceed 1");
    }
};

struct RegimeInfo {
    Regime regime = Regime::bounded;
    double x_exponent = 0;  // power of X (power regime)
    int log_exponent = 0;   // power of log X
    std::string description;
};

/// bounded if phi(k)/4 - c > 1, log^{B+1} X if it equals 1, X^{1-(phi(k)/4-c)} log^B X otherwise.
inline RegimeInfo classify_regime(const ModelParams& p) {
    p.check();
    const double e = p.decay();
    RegimeInfo r;
    if (std::abs(e - 1) < 1e-12) {
        r.regime = Regime::log_power;
        r.log_exponent = p.B() + 1;
        r.description = "log^" + std::to_string(r.log_exponent) + "(X)";
    } else if (e > 1) {
        r.regime = Regime::bounded;
        r.description = "bounded";
    } else {
        r.regime = Regime::power;
        r.x_exponent = 1 - e;
        r.log_exponent = p.B();
        char buf[64];
        std::snprintf(buf, sizeof buf, "X^%g*log^%d(X)", r.x_exponent, r.log_exponent);
        r.description = buf;
    }
    return r;
}

/// The two basis terms X^{1-e} log^B X and int_1^X u^{-e} log^B u du of the growth expression.
inline std::pair<double, double> growth_terms(const ModelParams& p, double X) {
    const double e = p.decay();
    const int B = p.B();
    const double lx = std::log(X);
    const double first = std::exp((1 - e) * lx) * std::pow(lx, B);
    // u = e^t turns the integral into int_0^{log X} e^{(1-e)t} t^B dt.
    auto integrand = [&](double t) { return std::exp((1 - e) * t) * std::pow(t, B); };
    const double second = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, lx, 15, 1e-8);
    return {first, second};
}

struct PredictionRow {
    double X = 0;
    double predicted = 0;
};

struct Prediction {
    RegimeInfo regime;
    double C = 1, D = 1;
    bool fitted = false;
    std::vector<PredictionRow> rows;
};

/// Least-squares fit of C, D to (X, observed) pairs; falls back to D alone when the basis is degenerate.
inline std::pair<double, double> fit_growth_constants(const ModelParams& p, const std::vector<std::pair<double, double>>& obs) {
    double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
    for (const auto& [x, y] : obs) {
        const auto [a, b] = growth_terms(p, x);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        t1 += a * y;
        t2 += b * y;
    }
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) > 1e-10 * s11 * s22) return {(t1 * s22 - t2 * s12) / det, (s11 * t2 - s12 * t1) / det};
    return {0.0, s22 > 0 ? t2 / s22 : 0.0};
}

/// Predicted growth on a geometric grid up to X; constants fitted to observations on the final decade when given.
inline Prediction predicted_count(const ModelParams& p, const std::vector<std::pair<double, double>>& observed = {},
                                  double grid_ratio = 1.05) {
    Prediction out;
    out.regime = classify_regime(p);
    if (!observed.empty()) {
        std::vector<std::pair<double, double>> tail;
        for (const auto& o : observed) {
            if (o.first >= p.X / 10) tail.push_back(o);
        }
        std::tie(out.C, out.D) = fit_growth_constants(p, tail.empty() ? observed : tail);
        out.fitted = true;
    }
    for (double x = 2; x <= p.X * (1 + 1e-12); x *= grid_ratio) {
        const auto [a, b] = growth_terms(p, x);
        out.rows.push_back({x, out.C * a + out.D * b});
    }
    if (out.rows.empty() || out.rows.back().X < p.X * (1 - 1e-12)) {
        const auto [a, b] = growth_terms(p, p.X);
        out.rows.push_back({p.X, out.C * a + out.D * b});
    }
    return out;
}

/// Partial sums S(X) = sum_{f <= X, gcd(f, N) = 1} b_k(f) prob_small(f, k, L) sampled on a geometric grid.
inline std::vector<std::pair<double, double>> small_value_partial_sums(u64 k, u64 N, u64 X, double L,
                                                                       double grid_ratio = 1.05) {
    const auto counts = count_characters(k, N, X);
    std::vector<std::pair<double, double>> out;
    double next = 2, sum = 0;
    std::size_t i = 0;
    while (next <= static_cast<double>(X)) {
        while (i < counts.per_conductor.size() && static_cast<double>(counts.per_conductor[i].conductor) <= next) {
            const auto& cc = counts.per_conductor[i++];
            sum += static_cast<double>(cc.count) * prob_small(cc.conductor, k, L);
        }
        out.emplace_back(next, sum);
        next *= grid_ratio;
    }
    while (i < counts.per_conductor.size()) {
        const auto& cc = counts.per_conductor[i++];
        sum += static_cast<double>(cc.count) * prob_small(cc.conductor, k, L);
    }
    out.emplace_back(static_cast<double>(X), sum);
    return out;
}

// ---------------------------------------------------------------------------
// Comparators

enum class ComparatorKind { vanishing, small_value, m_ratio };

/// Comparator functions for the ratio plots; c is used only by m_ratio.
inline double comparator(ComparatorKind kind, const std::string& curve, u64 k, double x, double c = 0) {
    if (!(x > 1)) throw Error("comparator: x must exceed 1");
    const double lx = std::log(x);
    switch (kind) {
        case ComparatorKind::vanishing:
            if (k == 3 && curve == "11a1") return std::sqrt(x) * std::pow(lx, 0.25);
            if (k == 3 && curve == "14a1") return std::sqrt(x) * std::pow(lx, 2.25);
            if (k == 5 && curve == "11a1") return std::pow(lx, 4.25);
            if (k == 5 && curve == "14a1") return std::pow(lx, 1.5);
            throw Error("no vanishing comparator for (" + curve + ", k=" + std::to_string(k) +
                        "); supported: 11a1 and 14a1 with k = 3, 5");
        case ComparatorKind::small_value:
            if (k == 3) return std::sqrt(x);
            if (k == 5) return lx * lx;
            throw Error("no small-value comparator for k=" + std::to_string(k) + "; supported: k = 3, 5");
        case ComparatorKind::m_ratio:
            if (k == 3) return std::pow(x, 0.5 + c);
            if (k == 5) return std::pow(x, c) * lx;
            throw Error("no m-ratio comparator for k=" + std::to_string(k) + "; supported: k = 3, 5");
    }
    throw Error("unknown comparator");
}

/// 4 log|A| / (phi(k) log f).
inline double brauer_siegel_quotient(i64 A, u64 f, u64 k) {
    if (A == 0) throw Error("Brauer-Siegel quotient undefined for A = 0");
    if (f < 2) throw Error("Brauer-Siegel quotient needs f >= 2");
    return 4 * std::log(std::abs(static_cast<double>(A))) /
           (static_cast<double>(euler_phi(k)) * std::log(static_cast<double>(f)));
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloEstimate {
    double mean = 0;
    double std_error = 0;
    u64 samples = 0;
    u64 seed = 0;
};

/// Fraction of [0,1]^n with x_1 ... x_n <= C. Samples are split into fixed chunks of 2^20, chunk i drawing from
/// mt19937_64 seeded by seed_seq{seed, i}, so the result does not depend on jobs.
inline MonteCarloEstimate monte_carlo_volume(int n, double C, u64 samples, u64 seed, unsigned jobs = 1) {
    if (n < 1 || samples == 0) throw Error("monte_carlo_volume: need n >= 1 and samples > 0");
    constexpr u64 chunk = u64{1} << 20;
    const u64 chunks = (samples + chunk - 1) / chunk;
    std::vector<u64> hits(chunks, 0);
    auto work = [&](unsigned w, unsigned nw) {
        for (u64 i = w; i < chunks; i += nw) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i)};
            std::mt19937_64 rng(seq);
            const u64 m = std::min(chunk, samples - i * chunk);
            u64 h = 0;
            for (u64 s = 0; s < m; ++s) {
                double prod = 1;
                for (int d = 0; d < n; ++d) prod *= static_cast<double>(rng() >> 11) * 0x1.0p-53;
                h += prod <= C ? 1 : 0;
            }
            hits[i] = h;
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
    u64 total = 0;
    for (u64 h : hits) total += h;
    MonteCarloEstimate est;
    est.samples = samples;
    est.seed = seed;
    est.mean = static_cast<double>(total) / static_cast<double>(samples);
    est.std_error = std::sqrt(est.mean * (1 - est.mean) / static_cast<double>(samples));
    return est;
}

}  // namespace twistval
