#pragma once

// Test-only oracle: explicit construction of every character chi of (Z/f)^*
// with chi^k = 1 as a full value table, by extending homomorphisms one
// generator at a time. Uses no CRT, no primitive roots and no closed forms.

#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

using Table = std::vector<int>;  // exponent mod k at each residue, -1 for non-units

inline std::vector<Table> all_characters_dividing(std::uint64_t f, std::uint64_t k) {
    std::vector<char> in_h(f, 0);
    std::vector<std::uint64_t> h_elems{1 % f};
    in_h[1 % f] = 1;
    std::vector<Table> homs{Table(f, -1)};
    homs[0][1 % f] = 0;

    std::vector<std::uint64_t> units;
    for (std::uint64_t r = 1; r < f; ++r) {
        if (std::gcd(r, f) == 1) units.push_back(r);
    }
    if (f == 1) return homs;

    for (std::uint64_t g : units) {
        if (in_h[g]) continue;
        // Smallest r >= 1 with g^r in H.
        std::uint64_t r = 1, gr = g;
        while (!in_h[gr]) {
            gr = gr * g % f;
            ++r;
        }
        std::vector<std::uint64_t> new_elems;
        std::vector<Table> next;
        for (const Table& phi : homs) {
            const int target = phi[gr];
            for (std::uint64_t e = 0; e < k; ++e) {
                if ((r * e) % k != static_cast<std::uint64_t>(target)) continue;
                Table t = phi;
                std::uint64_t gi = 1;
                for (std::uint64_t i = 0; i < r; ++i) {
                    for (std::uint64_t x : h_elems) {
                        const std::uint64_t y = x * gi % f;
                        t[y] = static_cast<int>((static_cast<std::uint64_t>(phi[x]) + i * e) % k);
                    }
                    gi = gi * g % f;
                }
                next.push_back(std::move(t));
            }
        }
        std::uint64_t gi = 1;
        for (std::uint64_t i = 0; i < r; ++i) {
            for (std::uint64_t x : h_elems) new_elems.push_back(x * gi % f);
            gi = gi * g % f;
        }
        for (std::uint64_t y : new_elems) in_h[y] = 1;
        h_elems = std::move(new_elems);
        homs = std::move(next);
    }
    return homs;
}

inline std::uint64_t table_order(const Table& t, std::uint64_t k) {
    std::uint64_t g = k;
    for (int e : t) {
        if (e >= 0) g = std::gcd(g, static_cast<std::uint64_t>(e));
    }
    return k / g;
}

/// chi is primitive mod f iff it is nontrivial on {x = 1 mod f/p} for every prime p | f.
inline bool table_is_primitive(const Table& t, std::uint64_t f) {
    std::uint64_t m = f;
    for (std::uint64_t p = 2; p <= m; ++p) {
        if (m % p != 0) continue;
        while (m % p == 0) m /= p;
        const std::uint64_t d = f / p;
        bool trivial = true;
        for (std::uint64_t x = 1; x < f && trivial; x += d) {
            if (t[x] > 0) trivial = false;
        }
        if (trivial) return false;
    }
    return f > 1;
}

/// Value tables of the primitive characters of conductor f with exact order k.
inline std::vector<Table> primitive_of_order(std::uint64_t f, std::uint64_t k) {
    std::vector<Table> out;
    for (auto& t : all_characters_dividing(f, k)) {
        if (table_order(t, k) == k && table_is_primitive(t, f)) out.push_back(std::move(t));
    }
    return out;
}

/// Primitive characters of conductor f whose order divides k.
inline std::uint64_t primitive_dividing_count(std::uint64_t f, std::uint64_t k) {
    std::uint64_t n = 0;
    for (const auto& t : all_characters_dividing(f, k)) n += table_is_primitive(t, f) ? 1 : 0;
    return n;
}

}  // namespace oracle
