#pragma once

// Small exact integer utilities shared by the character, curve and model layers.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twistval {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arithmetic overflow in an exact counter.
class OverflowError : public Error {
public:
    using Error::Error;
};

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

struct PrimePower {
    u64 p = 0;
    int b = 0;
    u64 q = 1;  // p^b

    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

inline constexpr u64 mulmod(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline constexpr u64 powmod(u64 base, u64 exp, u64 m) {
    if (m == 1) return 0;
    u64 result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mulmod(result, base, m);
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    return result;
}

inline constexpr u64 ipow(u64 base, int exp) {
    u64 r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Residue of a (possibly negative) integer modulo m, in [0, m).
inline constexpr u64 mod_floor(i64 a, u64 m) {
    const i64 mm = static_cast<i64>(m);
    i64 r = a % mm;
    return static_cast<u64>(r < 0 ? r + mm : r);
}

/// Inverse of a modulo m; requires gcd(a, m) == 1.
inline i64 invmod(i64 a, i64 m) {
    i64 old_r = mod_floor(a, static_cast<u64>(m)), r = m;
    i64 old_s = 1, s = 0;
    while (r != 0) {
        const i64 qt = old_r / r;
        old_r -= qt * r;
        std::swap(old_r, r);
        old_s -= qt * s;
        std::swap(old_s, s);
    }
    if (old_r != 1) throw Error("invmod: argument not invertible");
    return static_cast<i64>(mod_floor(old_s, static_cast<u64>(m)));
}

/// Trial-division factorization; fine for the moduli used here (< 2^40).
inline std::vector<PrimePower> factorize(u64 n) {
    std::vector<PrimePower> out;
    for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p != 0) continue;
        PrimePower pp{p, 0, 1};
        while (n % p == 0) {
            n /= p;
            ++pp.b;
            pp.q *= p;
        }
        out.push_back(pp);
    }
    if (n > 1) out.push_back({n, 1, n});
    return out;
}

inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % p == 0) return n == p;
    }
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        u64 x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

inline u64 euler_phi(u64 n) {
    u64 r = n;
    for (const auto& pp : factorize(n)) r = r / pp.p * (pp.p - 1);
    return r;
}

inline u64 euler_phi(const PrimePower& pp) {
    return pp.b == 0 ? 1 : (pp.p - 1) * (pp.q / pp.p);
}

inline int mobius(u64 n) {
    int r = 1;
    for (const auto& pp : factorize(n)) {
        if (pp.b > 1) return 0;
        r = -r;
    }
    return r;
}

inline std::vector<u64> divisors(u64 n) {
    std::vector<u64> ds{1};
    for (const auto& pp : factorize(n)) {
        const std::size_t sz = ds.size();
        u64 q = 1;
        for (int e = 1; e <= pp.b; ++e) {
            q *= pp.p;
            for (std::size_t i = 0; i < sz; ++i) ds.push_back(ds[i] * q);
        }
    }
    std::sort(ds.begin(), ds.end());
    return ds;
}

inline u64 sigma0(u64 n) {
    u64 r = 1;
    for (const auto& pp : factorize(n)) r *= static_cast<u64>(pp.b + 1);
    return r;
}

inline u64 lcm_u64(u64 a, u64 b) { return a / std::gcd(a, b) * b; }

/// Multiplicative order of a modulo m, given the group order (a multiple of it).
inline u64 multiplicative_order(u64 a, u64 m, u64 group_order) {
    u64 ord = group_order;
    for (const auto& pp : factorize(group_order)) {
        for (int i = 0; i < pp.b; ++i) {
            if (powmod(a, ord / pp.p, m) == 1) ord /= pp.p;
            else break;
        }
    }
    return ord;
}

/// Least primitive root modulo an odd prime power p^b.
inline u64 least_primitive_root(const PrimePower& pp) {
    if (pp.p == 2) throw Error("least_primitive_root: p must be odd");
    const auto fac = factorize(pp.p - 1);
    const u64 p2 = pp.p * pp.p;
    for (u64 g = 2;; ++g) {
        if (g % pp.p == 0) continue;
        bool ok = true;
        for (const auto& f : fac) {
            if (powmod(g, (pp.p - 1) / f.p, pp.p) == 1) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        // A primitive root mod p lifts to all p^b (b >= 2) iff g^(p-1) != 1 mod p^2.
        if (pp.b >= 2 && powmod(g, pp.p - 1, p2) == 1) continue;
        return g;
    }
}

/// Smallest-prime-factor sieve over [0, n].
class SpfSieve {
public:
    explicit SpfSieve(u64 n) : spf_(n + 1, 0) {
        for (u64 i = 2; i <= n; ++i) {
            if (spf_[i] != 0) continue;
            for (u64 j = i; j <= n; j += i) {
                if (spf_[j] == 0) spf_[j] = static_cast<std::uint32_t>(i);
            }
        }
    }

    u64 limit() const { return spf_.size() - 1; }
    u64 spf(u64 n) const { return spf_[n]; }
    bool is_prime(u64 n) const { return n >= 2 && spf_[n] == n; }

    /// Factorization into the caller-supplied buffer (cleared first).
    void factor(u64 n, std::vector<PrimePower>& out) const {
        out.clear();
        while (n > 1) {
            const u64 p = spf_[n];
            PrimePower pp{p, 0, 1};
            while (n % p == 0) {
                n /= p;
                ++pp.b;
                pp.q *= p;
            }
            out.push_back(pp);
        }
    }

private:
    std::vector<std::uint32_t> spf_;
};

}  // namespace twistval
