#pragma once

// Primitive Dirichlet characters of a fixed order.
//
// A character of order k is stored as CRT-local exponent data: at each prime
// power p^b of the conductor the local character sends a fixed generator to
// zeta_k^e, where zeta_k = exp(2 pi i / k). Values therefore stay exact
// (integers mod k) until a complex number is requested.
//
// Generator conventions (these fix the Conrey labels):
//   odd p   : the least primitive root modulo p^b;
//   p = 2   : -1 and 5 for b >= 3; -1 alone for b = 2.
// The Conrey label n of chi satisfies chi(m) = e(log_g(n) log_g(m) / phi(p^b))
// at every odd p^b, and the usual (1-eps_n)(1-eps_m)/8 + a_n a_m / 2^(b-2)
// rule at 2^b.
//
// Conductors of primitive characters are odd or divisible by 4 (there is no
// primitive character mod 2), so the "odd or 4 | f" restriction on moduli
// excludes nothing here.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "arith.hpp"

namespace twistval {

/// One CRT component of a primitive character, with exponents taken mod k.
struct LocalCharacter {
    PrimePower modulus;
    u64 generator = 1;    // least primitive root (odd p) or 5 (p = 2, b >= 3)
    u64 exp_generator = 0;  // chi(generator) = zeta_k^exp_generator
    u64 exp_sign = 0;     // p = 2 only: chi(-1) = zeta_k^exp_sign
    u64 order = 1;        // order of this local character

    friend bool operator==(const LocalCharacter&, const LocalCharacter&) = default;
};

namespace detail {

/// Order of zeta_k^e.
inline u64 root_order(u64 e, u64 k) { return k / std::gcd(e % k, k); }

/// Order of the cyclic part of (Z/p^b)^* that carries `generator`.
inline u64 cyclic_order(const PrimePower& pp) {
    if (pp.p != 2) return euler_phi(pp);
    return pp.b >= 3 ? pp.q / 4 : 1;
}

inline u64 generator_for(const PrimePower& pp) {
    if (pp.p != 2) return least_primitive_root(pp);
    return pp.b >= 3 ? 5 : 1;
}

/// Index i in [0, d) with h^i == y (mod q), where h has order d; nullopt if absent.
inline std::optional<u64> small_log(u64 h, u64 y, u64 d, u64 q) {
    u64 x = 1;
    for (u64 i = 0; i < d; ++i) {
        if (x == y) return i;
        x = mulmod(x, h, q);
    }
    return std::nullopt;
}

/// Exponent (mod k) of the local character at a unit residue a mod q.
inline u64 local_exponent(const LocalCharacter& lc, u64 a, u64 k) {
    const PrimePower& pp = lc.modulus;
    u64 e = 0;
    if (pp.p == 2) {
        if (a % 4 == 3) {
            e = lc.exp_sign;
            a = pp.q - a;
        }
        if (pp.b < 3) return e % k;
    }
    const u64 d = root_order(lc.exp_generator, k);
    if (d == 1) return e % k;
    const u64 n = cyclic_order(pp);
    const u64 h = powmod(lc.generator, n / d, pp.q);
    const u64 y = powmod(a, n / d, pp.q);
    const auto i = small_log(h, y, d, pp.q);
    // y always lies in <h>: it is an element of order dividing d in a cyclic group.
    return (e + lc.exp_generator * (*i)) % k;
}

/// Chinese remaindering of local residues.
inline u64 crt_combine(const std::vector<std::pair<u64, u64>>& residues_moduli) {
    u128 x = 0, m = 1;
    for (const auto& [r, q] : residues_moduli) {
        // x' = x + m * t, with x + m t == r (mod q).
        const u64 mm = static_cast<u64>(m % q);
        const u64 diff = mod_floor(static_cast<i64>(r) - static_cast<i64>(static_cast<u64>(x % q)), q);
        const u64 t = q == 1 ? 0 : mulmod(diff, static_cast<u64>(invmod(static_cast<i64>(mm), static_cast<i64>(q))), q);
        x += m * t;
        m *= q;
    }
    return static_cast<u64>(x);
}

}  // namespace detail

/// A primitive Dirichlet character of exact order k. Immutable once built.
class PrimitiveCharacter {
public:
    PrimitiveCharacter(u64 order, std::vector<LocalCharacter> parts) : order_(order), parts_(std::move(parts)) {
        std::sort(parts_.begin(), parts_.end(),
                  [](const LocalCharacter& a, const LocalCharacter& b) { return a.modulus.p < b.modulus.p; });
        conductor_ = 1;
        u64 ord = 1;
        for (const auto& lc : parts_) {
            conductor_ *= lc.modulus.q;
            ord = lcm_u64(ord, lc.order);
        }
        if (ord != order_) throw Error("PrimitiveCharacter: local orders do not combine to the stated order");
        label_ = compute_label();
    }

    u64 conductor() const { return conductor_; }
    u64 order() const { return order_; }
    u64 label() const { return label_; }
    const std::vector<LocalCharacter>& local_parts() const { return parts_; }

    /// chi(a) = zeta_k^m; nullopt when gcd(a, f) > 1.
    std::optional<u64> exponent(i64 a) const {
        const u64 r = mod_floor(a, conductor_);
        if (std::gcd(r, conductor_) != 1) return std::nullopt;
        u64 e = 0;
        for (const auto& lc : parts_) e += detail::local_exponent(lc, r % lc.modulus.q, order_);
        return e % order_;
    }

    template <class Real = double>
    std::complex<Real> value(i64 a) const {
        const auto e = exponent(a);
        if (!e) return {0, 0};
        return root_of_unity<Real>(*e, order_);
    }

    /// Exponent table over residues 0..f-1; -1 marks non-units.
    std::vector<std::int32_t> exponent_table() const {
        std::vector<std::int32_t> table(conductor_, 0);
        std::vector<std::uint8_t> unit(conductor_, 1);
        for (const auto& lc : parts_) {
            const u64 q = lc.modulus.q;
            std::vector<std::int32_t> local(q, -1);
            if (lc.modulus.p != 2) {
                u64 x = 1;
                const u64 n = euler_phi(lc.modulus);
                for (u64 i = 0; i < n; ++i) {
                    local[x] = static_cast<std::int32_t>(mulmod(lc.exp_generator, i, order_));
                    x = mulmod(x, lc.generator, q);
                }
            } else if (lc.modulus.b == 2) {
                local[1] = 0;
                local[3] = static_cast<std::int32_t>(lc.exp_sign % order_);
            } else {
                u64 x = 1;
                for (u64 v = 0; v < q / 4; ++v) {
                    const u64 e = mulmod(lc.exp_generator, v, order_);
                    local[x] = static_cast<std::int32_t>(e);
                    local[q - x] = static_cast<std::int32_t>((e + lc.exp_sign) % order_);
                    x = mulmod(x, 5, q);
                }
            }
            for (u64 r = 0; r < conductor_; ++r) {
                const std::int32_t e = local[r % q];
                if (e < 0) {
                    unit[r] = 0;
                } else {
                    table[r] = static_cast<std::int32_t>((static_cast<u64>(table[r]) + static_cast<u64>(e)) % order_);
                }
            }
        }
        for (u64 r = 0; r < conductor_; ++r) {
            if (!unit[r]) table[r] = -1;
        }
        return table;
    }

    /// chi^j for j coprime to the order (a Galois conjugate of chi).
    PrimitiveCharacter power(u64 j) const {
        j %= order_;
        if (std::gcd(j, order_) != 1) throw Error("PrimitiveCharacter::power: exponent must be coprime to the order");
        std::vector<LocalCharacter> parts = parts_;
        for (auto& lc : parts) {
            lc.exp_generator = mulmod(lc.exp_generator, j, order_);
            lc.exp_sign = mulmod(lc.exp_sign, j, order_);
        }
        return PrimitiveCharacter(order_, std::move(parts));
    }

    PrimitiveCharacter conj() const { return power(order_ - 1); }

    bool is_even() const { return exponent(-1).value() == 0; }

    template <class Real>
    static std::complex<Real> root_of_unity(u64 e, u64 k) {
        const Real angle = 2 * std::numbers::pi_v<Real> * static_cast<Real>(e % k) / static_cast<Real>(k);
        return {std::cos(angle), std::sin(angle)};
    }

    friend bool operator==(const PrimitiveCharacter& a, const PrimitiveCharacter& b) {
        return a.order_ == b.order_ && a.conductor_ == b.conductor_ && a.label_ == b.label_;
    }

private:
    u64 compute_label() const {
        std::vector<std::pair<u64, u64>> rm;
        for (const auto& lc : parts_) {
            const PrimePower& pp = lc.modulus;
            u64 n = 1;
            if (pp.p != 2) {
                const u64 t = static_cast<u64>(static_cast<u128>(lc.exp_generator) * euler_phi(pp) / order_);
                n = powmod(lc.generator, t, pp.q);
            } else if (pp.b == 2) {
                n = lc.exp_sign % order_ == 0 ? 1 : 3;
            } else {
                const u64 a = static_cast<u64>(static_cast<u128>(lc.exp_generator) * (pp.q / 4) / order_);
                n = powmod(5, a, pp.q);
                if (lc.exp_sign % order_ != 0) n = pp.q - n;
            }
            rm.emplace_back(n, pp.q);
        }
        return detail::crt_combine(rm) % std::max<u64>(conductor_, 1);
    }

    u64 order_ = 1;
    u64 conductor_ = 1;
    u64 label_ = 1;
    std::vector<LocalCharacter> parts_;
};

// ---------------------------------------------------------------------------
// Counting

/// Number of characters of (Z/p^b)^* whose order divides k.
inline u64 count_characters_dividing(u64 p, int b, u64 k) {
    if (b <= 0) return 1;
    if (p != 2) return std::gcd(euler_phi(PrimePower{p, b, ipow(p, b)}), k);
    if (b == 1) return 1;
    return std::gcd<u64>(2, k) * std::gcd<u64>(ipow(2, b - 2), k);
}

/// a_k(p^b): primitive characters of conductor exactly p^b with order dividing k.
///
/// Equals gcd-counts at p^b minus those at p^(b-1). For 2 <= b <= v_p(k)+1 this is
/// (p^(b-1) - p^(b-2)) gcd(p-1, k); the b = 1 value is gcd(p-1, k) - 1.
inline u64 local_count(u64 p, int b, u64 k) {
    if (b < 1) return 0;
    return count_characters_dividing(p, b, k) - count_characters_dividing(p, b - 1, k);
}

/// b_k(f) from the factorization of f: multiplicativity plus inclusion-exclusion on divisors of k.
inline u64 primitive_count(const std::vector<PrimePower>& factors, u64 k) {
    i64 total = 0;
    for (u64 d : divisors(k)) {
        const int mu = mobius(k / d);
        if (mu == 0) continue;
        i64 prod = 1;
        for (const auto& pp : factors) {
            prod *= static_cast<i64>(local_count(pp.p, pp.b, d));
            if (prod == 0) break;
        }
        total += mu * prod;
    }
    return static_cast<u64>(total);
}

inline u64 primitive_count(u64 f, u64 k) { return primitive_count(factorize(f), k); }

struct ConductorCount {
    u64 conductor = 0;
    u64 count = 0;
};

/// #B_{k,N}(X) with per-conductor breakdown.
struct CharacterCountReport {
    u64 max_conductor = 0;  // X
    u64 coprime_to = 1;     // N
    u64 order = 0;          // k
    std::vector<ConductorCount> per_conductor;  // only conductors with b_k(f) > 0
    u64 cumulative = 0;
    int log_power = 0;          // sigma0(k) - 2
    double comparator_constant = 0;  // c fitted at X from c X log^(sigma0(k)-2) X

    double comparator(double x) const {
        return comparator_constant * x * std::pow(std::log(x), log_power);
    }
};

namespace detail {

inline u64 checked_add(u64 a, u64 b) {
    u64 r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw OverflowError("character count overflowed 64 bits");
    return r;
}

}  // namespace detail

/// Counts primitive characters of order k with gcd(f, N) = 1 and lo <= f <= hi.
inline CharacterCountReport count_characters(u64 k, u64 coprime_to, u64 lo, u64 hi) {
    if (k < 2) throw Error("count_characters: order must be >= 2");
    if (coprime_to < 1) throw Error("count_characters: coprimality modulus must be >= 1");
    CharacterCountReport rep;
    rep.max_conductor = hi;
    rep.coprime_to = coprime_to;
    rep.order = k;
    rep.log_power = static_cast<int>(sigma0(k)) - 2;
    if (hi < 1 || lo > hi) return rep;
    const SpfSieve sieve(hi);
    std::vector<PrimePower> fac;
    for (u64 f = std::max<u64>(lo, 2); f <= hi; ++f) {
        if (std::gcd(f, coprime_to) != 1) continue;
        sieve.factor(f, fac);
        const u64 b = primitive_count(fac, k);
        if (b == 0) continue;
        rep.per_conductor.push_back({f, b});
        rep.cumulative = detail::checked_add(rep.cumulative, b);
    }
    const double x = static_cast<double>(hi);
    const double denom = x * std::pow(std::log(x), rep.log_power);
    if (hi > 1 && denom > 0 && std::isfinite(denom)) rep.comparator_constant = static_cast<double>(rep.cumulative) / denom;
    return rep;
}

inline CharacterCountReport count_characters(u64 k, u64 coprime_to, u64 max_conductor) {
    return count_characters(k, coprime_to, 1, max_conductor);
}

// ---------------------------------------------------------------------------
// Construction and enumeration

/// Primitive local characters at p^b whose order divides k.
inline std::vector<LocalCharacter> local_primitive_characters(const PrimePower& pp, u64 k) {
    std::vector<LocalCharacter> out;
    const u64 g = detail::generator_for(pp);
    if (pp.p == 2) {
        // Every nontrivial character of 2-power conductor has even order.
        if (pp.b < 2 || k % 2 != 0) return out;
        if (pp.b == 2) {
            out.push_back({pp, g, 0, k / 2, 2});
            return out;
        }
        const u64 n = pp.q / 4;
        const u64 d = std::gcd(n, k);
        for (u64 s : {u64{0}, k / 2}) {
            for (u64 i = 0; i < d; ++i) {
                const u64 e = (k / d) * i;
                const u64 ord5 = detail::root_order(e, k);
                if (ord5 != n) continue;  // primitive iff chi(5) has order 2^(b-2)
                out.push_back({pp, g, e, s, lcm_u64(ord5, detail::root_order(s, k))});
            }
        }
        return out;
    }
    const u64 n = euler_phi(pp);
    const u64 d = std::gcd(n, k);
    for (u64 i = 1; i < d; ++i) {
        const u64 e = (k / d) * i;
        const u64 ord = detail::root_order(e, k);
        // At p^b with b >= 2 the character is primitive iff p^(b-1) divides its order.
        bool primitive = true;
        if (pp.b >= 2) {
            const u64 need = pp.q / pp.p;
            primitive = ord % need == 0;
        }
        if (primitive) out.push_back({pp, g, e, 0, ord});
    }
    return out;
}

/// Calls fn(chi) for every primitive character of exact order k and conductor f, in label order.
inline void for_each_character_of_conductor(u64 f, const std::vector<PrimePower>& factors, u64 k,
                                            const std::function<void(const PrimitiveCharacter&)>& fn) {
    if (f < 2) return;
    std::vector<std::vector<LocalCharacter>> choices;
    for (const auto& pp : factors) {
        choices.push_back(local_primitive_characters(pp, k));
        if (choices.back().empty()) return;
    }
    std::vector<PrimitiveCharacter> chars;
    std::vector<std::size_t> idx(choices.size(), 0);
    while (true) {
        u64 ord = 1;
        for (std::size_t i = 0; i < idx.size(); ++i) ord = lcm_u64(ord, choices[i][idx[i]].order);
        if (ord == k) {
            std::vector<LocalCharacter> parts;
            parts.reserve(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) parts.push_back(choices[i][idx[i]]);
            chars.emplace_back(k, std::move(parts));
        }
        std::size_t pos = 0;
        while (pos < idx.size()) {
            if (++idx[pos] < choices[pos].size()) break;
            idx[pos++] = 0;
        }
        if (pos == idx.size()) break;
    }
    std::sort(chars.begin(), chars.end(),
              [](const PrimitiveCharacter& a, const PrimitiveCharacter& b) { return a.label() < b.label(); });
    for (const auto& c : chars) fn(c);
}

/// Streams every primitive character of exact order k with gcd(f, N) = 1 and lo <= f <= hi,
/// ordered by (conductor, label).
inline void for_each_character(u64 k, u64 coprime_to, u64 lo, u64 hi,
                               const std::function<void(const PrimitiveCharacter&)>& fn) {
    if (hi < 2 || lo > hi) return;
    const SpfSieve sieve(hi);
    std::vector<PrimePower> fac;
    for (u64 f = std::max<u64>(lo, 2); f <= hi; ++f) {
        if (std::gcd(f, coprime_to) != 1) continue;
        sieve.factor(f, fac);
        if (primitive_count(fac, k) == 0) continue;
        for_each_character_of_conductor(f, fac, k, fn);
    }
}

inline std::vector<PrimitiveCharacter> enumerate_characters(u64 k, u64 coprime_to, u64 lo, u64 hi) {
    std::vector<PrimitiveCharacter> out;
    for_each_character(k, coprime_to, lo, hi, [&](const PrimitiveCharacter& c) { out.push_back(c); });
    return out;
}

inline std::vector<PrimitiveCharacter> characters_of_conductor(u64 f, u64 k) {
    std::vector<PrimitiveCharacter> out;
    for_each_character_of_conductor(f, factorize(f), k, [&](const PrimitiveCharacter& c) { out.push_back(c); });
    return out;
}

/// Rebuilds a character from its conductor, Conrey label and order.
inline PrimitiveCharacter character_from_label(u64 f, u64 label, u64 k) {
    if (f < 2 || std::gcd(label, f) != 1) throw Error("character_from_label: label must be a unit mod f");
    std::vector<LocalCharacter> parts;
    for (const auto& pp : factorize(f)) {
        const u64 n = label % pp.q;
        LocalCharacter lc{pp, detail::generator_for(pp), 0, 0, 1};
        u64 x = n;
        if (pp.p == 2) {
            if (pp.b == 1) throw Error("character_from_label: conductor 2 mod 4 is not primitive");
            if (n % 4 == 3) {
                if (k % 2 != 0) throw Error("character_from_label: label has even local order");
                lc.exp_sign = k / 2;
                x = pp.q - n;
            }
        }
        const u64 cyc = detail::cyclic_order(pp);
        if (cyc > 1) {
            const u64 d = std::gcd(cyc, k);
            const u64 h = powmod(lc.generator, cyc / d, pp.q);
            const auto i = detail::small_log(h, x % pp.q, d, pp.q);
            if (!i) throw Error("character_from_label: local order does not divide k");
            lc.exp_generator = (k / d) * (*i);
        }
        lc.order = lcm_u64(detail::root_order(lc.exp_generator, k), detail::root_order(lc.exp_sign, k));
        const auto prims = local_primitive_characters(pp, k);
        if (std::find(prims.begin(), prims.end(), lc) == prims.end()) {
            throw Error("character_from_label: label is not primitive at " + std::to_string(pp.q));
        }
        parts.push_back(lc);
    }
    PrimitiveCharacter chi(k, std::move(parts));
    return chi;
}

/// {chi^j : j in (Z/kZ)^*}, ordered by j.
inline std::vector<PrimitiveCharacter> galois_orbit(const PrimitiveCharacter& chi) {
    std::vector<PrimitiveCharacter> out;
    for (u64 j = 1; j < chi.order(); ++j) {
        if (std::gcd(j, chi.order()) != 1) continue;
        PrimitiveCharacter c = chi.power(j);
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
    }
    return out;
}

/// Exponents j in [1, k/2) coprime to k: one per pair {sigma, conj sigma}.
inline std::vector<u64> real_subfield_representatives(u64 k) {
    std::vector<u64> reps;
    for (u64 j = 1; 2 * j < k; ++j) {
        if (std::gcd(j, k) == 1) reps.push_back(j);
    }
    if (reps.empty()) reps.push_back(1);
    return reps;
}

/// Smallest label in the Galois orbit; identifies the orbit.
inline u64 orbit_key(u64 f, u64 label, u64 k) {
    u64 best = label % f;
    for (u64 j = 2; j < k; ++j) {
        if (std::gcd(j, k) != 1) continue;
        best = std::min(best, powmod(label, j, f));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Gauss sums

/// tau(chi) = sum_a chi(a) e(a/f) by direct summation.
template <class Real = double>
std::complex<Real> gauss_sum(const PrimitiveCharacter& chi) {
    const u64 f = chi.conductor();
    const u64 k = chi.order();
    const auto table = chi.exponent_table();
    std::vector<std::complex<Real>> by_exp(k);
    for (u64 a = 1; a < f; ++a) {
        if (table[a] < 0) continue;
        const Real angle = 2 * std::numbers::pi_v<Real> * static_cast<Real>(a) / static_cast<Real>(f);
        by_exp[static_cast<std::size_t>(table[a])] += std::complex<Real>(std::cos(angle), std::sin(angle));
    }
    std::complex<Real> tau{0, 0};
    for (u64 m = 0; m < k; ++m) tau += PrimitiveCharacter::root_of_unity<Real>(m, k) * by_exp[m];
    return tau;
}

}  // namespace twistval
