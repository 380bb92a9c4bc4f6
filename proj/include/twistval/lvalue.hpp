#pragma once

// Central values L(E, 1, chi) of twists by odd-order primitive characters and
// their algebraic parts, lambda factors, real parts alpha and orbit norms A.

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "characters.hpp"
#include "curve.hpp"

namespace twistval {

/// Distance from an integer accepted as "integral".
inline constexpr double kIntegralityTolerance = 1e-4;
/// |L_alg| below this counts as a vanishing central value.
inline constexpr double kZeroThreshold = 1e-3;

class BudgetError : public Error {
public:
    BudgetError(u64 needed, u64 budget)
        : Error("coefficient budget exceeded: need T = " + std::to_string(needed) + " terms, budget is " +
                std::to_string(budget)),
          needed_terms(needed) {}
    u64 needed_terms;
};

class UnsupportedCase : public Error {
public:
    using Error::Error;
};

/// Decay rate c = 2 pi / (f sqrt N) of the series terms.
inline double series_rate(u64 f, u64 N) {
    return 2 * std::numbers::pi / (static_cast<double>(f) * std::sqrt(static_cast<double>(N)));
}

/// Smallest T whose tail bound 4 e^{-c(T+1)} / (1 - e^{-c}) is below 10^-digits.
/// Uses |a_n| <= sigma_0(n) sqrt(n) <= 2n and |c_chi| = 1.
inline u64 required_terms(u64 f, u64 N, int digits) {
    if (digits < 1) throw Error("target digits must be positive");
    const double c = series_rate(f, N);
    const double need = (std::log(4.0 / -std::expm1(-c)) + digits * std::log(10.0)) / c;
    return static_cast<u64>(std::max(1.0, std::ceil(need - 1)));
}

/// a_n / n in working precision, shared read-only across conductors.
template <class Real = double>
struct SeriesContext {
    const CurveData* curve = nullptr;
    std::vector<Real> weight;  // weight[n] = a_n / n, index 0 unused

    SeriesContext(const CurveData& e, const CoefficientTable& tab) : curve(&e), weight(tab.a.size(), 0) {
        for (u64 n = 1; n < tab.a.size(); ++n) weight[n] = static_cast<Real>(tab.a[n]) / static_cast<Real>(n);
    }

    u64 budget() const { return weight.empty() ? 0 : weight.size() - 1; }
};

/// Values for one member chi^j of a Galois orbit.
template <class Real>
struct OrbitValue {
    u64 j = 1;
    std::complex<Real> S;    // sum a_n chi^j(n)/n e^{-cn}
    std::complex<Real> tau;  // Gauss sum of chi^j
    std::complex<Real> L;
};

/// Residue-class sums W_r = sum_{n = r mod f, n <= T} a_n/n e^{-cn} for one conductor.
/// Every orbit at this conductor reuses them, so an orbit costs O(f) instead of O(T).
template <class Real = double>
class ConductorKernel {
public:
    ConductorKernel(const SeriesContext<Real>& ctx, u64 f, int digits) : ctx_(&ctx), f_(f), digits_(digits) {
        const CurveData& e = *ctx.curve;
        if (std::gcd(f, e.conductor) != 1) throw Error("conductor must be coprime to N");
        T_ = required_terms(f, e.conductor, digits);
        if (T_ > ctx.budget()) throw BudgetError(T_, ctx.budget());
        const Real c = static_cast<Real>(2) * std::numbers::pi_v<Real> /
                       (static_cast<Real>(f) * std::sqrt(static_cast<Real>(e.conductor)));
        const Real q = std::exp(-c);
        W_.assign(f, 0);
        Real x = 1;
        u64 r = 0;
        for (u64 n = 1; n <= T_; ++n) {
            if ((n & 255) == 0) x = std::exp(-c * static_cast<Real>(n));
            else x *= q;
            if (++r == f) r = 0;
            W_[r] += ctx.weight[n] * x;
        }
        roots_.resize(f);
        for (u64 a = 0; a <= f / 2; ++a) {
            const Real angle = 2 * std::numbers::pi_v<Real> * static_cast<Real>(a) / static_cast<Real>(f);
            roots_[a] = {std::cos(angle), std::sin(angle)};
            if (a != 0) roots_[f - a] = std::conj(roots_[a]);
        }
    }

    u64 conductor() const { return f_; }
    u64 terms() const { return T_; }
    int digits() const { return digits_; }

    /// chi^j for j in (Z/k)^*, ascending.
    std::vector<OrbitValue<Real>> orbit(const PrimitiveCharacter& chi) const {
        if (chi.conductor() != f_) throw Error("character conductor does not match the kernel");
        const u64 k = chi.order();
        const auto table = chi.exponent_table();
        std::vector<std::complex<Real>> V(k), G(k);
        for (u64 r = 0; r < f_; ++r) {
            const std::int32_t m = table[r];
            if (m < 0) continue;
            V[static_cast<std::size_t>(m)] += W_[r];
            G[static_cast<std::size_t>(m)] += roots_[r];
        }
        const CurveData& e = *ctx_->curve;
        const u64 mN = chi.exponent(static_cast<i64>(e.conductor)).value();
        std::vector<std::complex<Real>> zeta(k);
        for (u64 m = 0; m < k; ++m) zeta[m] = PrimitiveCharacter::root_of_unity<Real>(m, k);
        std::vector<OrbitValue<Real>> out;
        for (u64 j = 1; j < k; ++j) {
            if (std::gcd(j, k) != 1) continue;
            OrbitValue<Real> v;
            v.j = j;
            for (u64 m = 0; m < k; ++m) {
                v.S += zeta[(j * m) % k] * V[m];
                v.tau += zeta[(j * m) % k] * G[m];
            }
            const std::complex<Real> c_chi = zeta[(j * mN) % k] * v.tau * v.tau / static_cast<Real>(f_);
            v.L = v.S + static_cast<Real>(e.root_number) * c_chi * std::conj(v.S);
            out.push_back(v);
        }
        return out;
    }

private:
    const SeriesContext<Real>* ctx_;
    u64 f_;
    int digits_;
    u64 T_ = 0;
    std::vector<Real> W_;
    std::vector<std::complex<Real>> roots_;
};

struct CentralValue {
    std::complex<double> value;
    u64 terms = 0;
};

/// L(E, 1, chi) with absolute error below 10^-digits.
template <class Real = double>
CentralValue central_value(const SeriesContext<Real>& ctx, const PrimitiveCharacter& chi, int digits) {
    const ConductorKernel<Real> kernel(ctx, chi.conductor(), digits);
    const auto vals = kernel.orbit(chi);
    const auto& v = vals.front();  // j = 1
    return {std::complex<double>(static_cast<double>(v.L.real()), static_cast<double>(v.L.imag())), kernel.terms()};
}

// ---------------------------------------------------------------------------
// Algebraic part and lambda

/// 2 tau(chi-bar) L / Omega^+; tau(chi-bar) = conj(tau(chi)) since chi is even.
inline std::complex<double> algebraic_part(const CurveData& e, const PrimitiveCharacter& chi, std::complex<double> L,
                                           std::complex<double> tau) {
    if (chi.order() % 2 == 0) throw UnsupportedCase("even-order characters need Omega^-; not supported");
    return 2.0 * std::conj(tau) * L / e.real_period;
}

inline std::complex<double> algebraic_part(const CurveData& e, const PrimitiveCharacter& chi, std::complex<double> L) {
    if (chi.order() % 2 == 0) throw UnsupportedCase("even-order characters need Omega^-; not supported");
    return algebraic_part(e, chi, L, gauss_sum<double>(chi));
}

enum class LambdaCase { generic, minus_one, plus_one };
enum class LambdaMode { canonical, alternative };  // alternative = zeta^{(k+1)/2}, test use only

inline std::string to_string(LambdaCase c) {
    switch (c) {
        case LambdaCase::generic: return "generic";
        case LambdaCase::minus_one: return "minus_one";
        case LambdaCase::plus_one: return "plus_one";
    }
    return "generic";
}

inline LambdaCase lambda_case_from_string(const std::string& s) {
    if (s == "generic") return LambdaCase::generic;
    if (s == "minus_one") return LambdaCase::minus_one;
    if (s == "plus_one") return LambdaCase::plus_one;
    throw Error("unknown lambda case '" + s + "'");
}

/// zeta_chi = w_E chi(-N) as an exponent of e^{2 pi i / 2k}.
inline u64 zeta_exponent(const CurveData& e, const PrimitiveCharacter& chi) {
    const u64 k = chi.order();
    const auto m = chi.exponent(-static_cast<i64>(e.conductor));
    if (!m) throw Error("character conductor is not coprime to N");
    return (2 * *m + (e.root_number == -1 ? k : 0)) % (2 * k);
}

struct LambdaChoice {
    LambdaCase kind = LambdaCase::generic;
    std::complex<double> lambda{1, 0};
    u64 zeta_exp = 0;  // zeta = e^{2 pi i zeta_exp / 2k}
};

/// Least c >= 2 with chi(c) of exact order k.
inline u64 full_order_witness(const PrimitiveCharacter& chi) {
    const u64 k = chi.order();
    for (u64 c = 2;; ++c) {
        const auto m = chi.exponent(static_cast<i64>(c));
        if (m && std::gcd(*m, k) == 1) return c;
    }
}

inline LambdaChoice lambda_select(const CurveData& e, const PrimitiveCharacter& chi,
                                  LambdaMode mode = LambdaMode::canonical) {
    const u64 k = chi.order();
    if (k < 3) throw Error("lambda_select: order must be at least 3");
    LambdaChoice out;
    out.zeta_exp = zeta_exponent(e, chi);
    const auto zeta = PrimitiveCharacter::root_of_unity<double>(out.zeta_exp, 2 * k);
    out.kind = out.zeta_exp == 0 ? LambdaCase::plus_one : out.zeta_exp == k ? LambdaCase::minus_one : LambdaCase::generic;
    if (mode == LambdaMode::alternative) {
        if (e.root_number != 1 || k % 2 == 0) throw UnsupportedCase("alternative lambda needs w_E = +1 and odd k");
        out.lambda = PrimitiveCharacter::root_of_unity<double>(out.zeta_exp * ((k + 1) / 2), 2 * k);
        return out;
    }
    switch (out.kind) {
        case LambdaCase::plus_one: out.lambda = 1; break;
        case LambdaCase::generic: out.lambda = 1.0 / (1.0 + std::conj(zeta)); break;
        case LambdaCase::minus_one: {
            const auto v = chi.value<double>(static_cast<i64>(full_order_witness(chi)));
            out.lambda = 1.0 / (v - std::conj(v));
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Records

struct TwistRecord {
    u64 f = 0;
    u64 label = 0;
    u64 k = 0;
    std::complex<double> L;
    std::complex<double> L_alg;
    u64 zeta_exp = 0;
    LambdaCase lambda_case = LambdaCase::generic;
    std::complex<double> lambda{1, 0};
    double alpha = 0;
    double alpha_imag = 0;
    i64 A = 0;
    double pre_round = 0;
    double residual = 0;
    u64 T = 0;
    int digits = 0;
    bool zero_mismatch = false;  // A = 0 but some orbit member has |L_alg| >= threshold, or vice versa

    bool reliable() const {
        return residual < kIntegralityTolerance && std::abs(alpha_imag) < kIntegralityTolerance && !zero_mismatch;
    }
};

struct OrbitMember {
    PrimitiveCharacter chi;
    u64 j = 1;
    std::complex<double> L;
    std::complex<double> L_alg;
};

struct NormResult {
    std::vector<double> alpha;       // per member, in member order
    std::vector<double> alpha_imag;
    std::vector<LambdaChoice> lambda;
    i64 A = 0;
    std::vector<double> pre_round;   // per member's own view of the orbit
    double residual = 0;             // worst over members
};

/// alpha = L_alg / lambda, and A = round of the product of alpha over one member per {sigma, conj sigma}.
/// members must be the whole orbit {chi^j : j in (Z/k)^*} ordered by j.
inline NormResult alpha_and_norm(const CurveData& e, const std::vector<OrbitMember>& members,
                                 LambdaMode mode = LambdaMode::canonical) {
    if (members.empty()) throw Error("alpha_and_norm: empty orbit");
    const u64 k = members.front().chi.order();
    std::vector<u64> index_of(k, members.size());
    for (std::size_t i = 0; i < members.size(); ++i) index_of[members[i].j % k] = i;
    for (u64 j = 1; j < k; ++j) {
        if (std::gcd(j, k) == 1 && index_of[j] == members.size()) throw Error("alpha_and_norm: incomplete orbit");
    }
    NormResult out;
    for (const auto& m : members) {
        const auto lc = lambda_select(e, m.chi, mode);
        const auto a = m.L_alg / lc.lambda;
        out.lambda.push_back(lc);
        out.alpha.push_back(a.real());
        out.alpha_imag.push_back(a.imag());
    }
    const auto reps = real_subfield_representatives(k);
    for (const auto& m : members) {
        double prod = 1;
        for (u64 r : reps) prod *= out.alpha[index_of[(m.j * r) % k]];
        out.pre_round.push_back(prod);
    }
    const double centre = out.pre_round.front();
    out.A = static_cast<i64>(std::llround(centre));
    for (double p : out.pre_round) out.residual = std::max(out.residual, std::abs(p - static_cast<double>(out.A)));
    return out;
}

/// Full record set for the orbit of chi, sorted by label.
template <class Real>
std::vector<TwistRecord> orbit_records(const ConductorKernel<Real>& kernel, const CurveData& e,
                                       const PrimitiveCharacter& chi, LambdaMode mode = LambdaMode::canonical) {
    const auto vals = kernel.orbit(chi);
    std::vector<OrbitMember> members;
    for (const auto& v : vals) {
        const std::complex<double> L(static_cast<double>(v.L.real()), static_cast<double>(v.L.imag()));
        const std::complex<double> tau(static_cast<double>(v.tau.real()), static_cast<double>(v.tau.imag()));
        auto c = chi.power(v.j);
        const auto L_alg = algebraic_part(e, c, L, tau);
        members.push_back({std::move(c), v.j, L, L_alg});
    }
    const auto nr = alpha_and_norm(e, members, mode);
    bool any_large = false;
    for (const auto& m : members) any_large = any_large || std::abs(m.L_alg) >= kZeroThreshold;
    const bool mismatch = (nr.A == 0) == any_large;
    std::vector<TwistRecord> out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        TwistRecord r;
        r.f = m.chi.conductor();
        r.label = m.chi.label();
        r.k = m.chi.order();
        r.L = m.L;
        r.L_alg = m.L_alg;
        r.zeta_exp = nr.lambda[i].zeta_exp;
        r.lambda_case = nr.lambda[i].kind;
        r.lambda = nr.lambda[i].lambda;
        r.alpha = nr.alpha[i];
        r.alpha_imag = nr.alpha_imag[i];
        r.A = nr.A;
        r.pre_round = nr.pre_round[i];
        r.residual = std::abs(nr.pre_round[i] - static_cast<double>(nr.A));
        r.T = kernel.terms();
        r.digits = kernel.digits();
        r.zero_mismatch = mismatch;
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const TwistRecord& a, const TwistRecord& b) { return a.label < b.label; });
    return out;
}

/// |L_alg - zeta conj(L_alg)| / |L_alg|; zero for vanishing values.
inline double reflection_residual(const TwistRecord& r) {
    const double mag = std::abs(r.L_alg);
    if (mag == 0) return 0;
    const auto zeta = PrimitiveCharacter::root_of_unity<double>(r.zeta_exp, 2 * r.k);
    return std::abs(r.L_alg - zeta * std::conj(r.L_alg)) / mag;
}

// ---------------------------------------------------------------------------
// Dataset normalization

/// gcd of all nonzero |A|; throws if every value is zero.
inline i64 nonzero_gcd(const std::vector<i64>& values) {
    i64 g = 0;
    for (i64 a : values) g = std::gcd(g, a < 0 ? -a : a);
    if (g == 0) throw Error("gcd normalization: every A is zero");
    return g;
}

/// Divides every A by the gcd of the nonzero |A|; returns that gcd.
inline i64 dataset_gcd_normalize(std::vector<TwistRecord>& records) {
    std::vector<i64> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(r.A);
    const i64 g = nonzero_gcd(values);
    for (auto& r : records) r.A /= g;
    return g;
}

// ---------------------------------------------------------------------------
// Root number

struct RootNumberReport {
    int w = 0;
    double defect_plus = 0;   // |L_{t1} - L_{t2}| assuming w = +1
    double defect_minus = 0;  // same for w = -1
};

/// The sign w for which the twisted series
///   sum a_n chi(n)/n e^{-cn/t} + w c_chi sum conj(a_n chi(n))/n e^{-cnt}
/// does not depend on t. chi defaults to the trivial character.
inline RootNumberReport detect_root_number(const CurveData& e, const CoefficientTable& tab,
                                           const std::optional<PrimitiveCharacter>& chi = std::nullopt,
                                           double t1 = 1.0, double t2 = 1.3) {
    const u64 f = chi ? chi->conductor() : 1;
    const double c = series_rate(f, e.conductor);
    const double tmin = std::min({t1, t2, 1 / t1, 1 / t2});
    const u64 T = static_cast<u64>(std::ceil((40 * std::log(10.0) + 2 * std::log(1 / c + 1)) / (c * tmin))) + 10;
    if (T > tab.length()) throw BudgetError(T, tab.length());
    std::complex<double> c_chi = 1;
    if (chi) {
        const auto tau = gauss_sum<double>(*chi);
        c_chi = chi->value<double>(static_cast<i64>(e.conductor)) * tau * tau / static_cast<double>(f);
    }
    auto halves = [&](double t) {
        std::complex<double> first = 0, second = 0;
        for (u64 n = 1; n <= T; ++n) {
            if (tab[n] == 0) continue;
            const std::complex<double> x = chi ? chi->value<double>(static_cast<i64>(n)) : 1.0;
            const auto term = static_cast<double>(tab[n]) / static_cast<double>(n) * x;
            first += term * std::exp(-c * n / t);
            second += std::conj(term) * std::exp(-c * n * t);
        }
        return std::make_pair(first, c_chi * second);
    };
    const auto [a1, b1] = halves(t1);
    const auto [a2, b2] = halves(t2);
    RootNumberReport r;
    r.defect_plus = std::abs((a1 + b1) - (a2 + b2));
    r.defect_minus = std::abs((a1 - b1) - (a2 - b2));
    const double lo = std::min(r.defect_plus, r.defect_minus), hi = std::max(r.defect_plus, r.defect_minus);
    if (!(lo < 1e-9 && hi > 1e3 * lo)) throw Error("root number undetermined for " + e.label);
    r.w = r.defect_plus < r.defect_minus ? 1 : -1;
    return r;
}

}  // namespace twistval
