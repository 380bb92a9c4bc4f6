#pragma once

// Conductor sweeps into a store, and whole-store verification.

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "stats.hpp"
#include "store.hpp"

namespace twistval {

struct SweepConfig {
    CurveData curve;
    u64 k = 3;
    u64 min_f = 2;
    u64 max_f = 0;
    int digits = 8;
    bool extended_precision = false;
    unsigned jobs = 1;
    u64 block_size = 1000;
    u64 point_count_crossover = kDefaultPointCountCrossover;
    std::filesystem::path store;
    bool resume = false;
    /// Polled after each committed chunk with the new watermark; true stops the sweep.
    std::function<bool(u64)> stop;
};

struct SweepReport {
    u64 start_f = 0;
    u64 watermark = 0;
    bool completed = false;
    u64 conductors = 0;
    u64 orbits = 0;
    u64 records = 0;
    u64 first_pass_unreliable = 0;  // records failing the checks before any retry
    u64 retried_orbits = 0;
    u64 unreliable = 0;  // records still failing after the retry
    u64 terms = 0;       // coefficient table length
    i64 normalization_g = 0;
};

inline constexpr int kRetryExtraDigits = 4;

inline void check_sweep_config(const SweepConfig& c) {
    if (c.k < 3 || c.k % 2 == 0) throw ConfigError("order k must be odd and at least 3");
    if (c.k > 1000) throw ConfigError("order k is too large");
    if (c.min_f < 2) throw ConfigError("min conductor must be at least 2");
    if (c.max_f < c.min_f) throw ConfigError("max conductor is below the min conductor");
    if (c.digits < 4 || c.digits > 30) throw ConfigError("digits must lie in [4, 30]");
    if (!c.extended_precision && c.digits + kRetryExtraDigits > 15)
        throw ConfigError("digits + 4 exceeds double precision; use extended precision");
    if (c.jobs == 0) throw ConfigError("jobs must be positive");
    if (c.block_size == 0) throw ConfigError("block size must be positive");
    if (c.store.empty()) throw ConfigError("store path is required");
    validate(c.curve);
}

namespace detail {

struct ConductorResult {
    std::vector<TwistRecord> records;
    u64 orbits = 0;
    u64 first_pass_unreliable = 0;
    u64 retried = 0;
    u64 unreliable = 0;
};

template <class Real>
ConductorResult sweep_conductor(const SeriesContext<Real>& ctx, const CurveData& e, u64 f, u64 k, int digits) {
    ConductorResult out;
    const auto chars = characters_of_conductor(f, k);
    if (chars.empty()) return out;
    const ConductorKernel<Real> kernel(ctx, f, digits);
    std::optional<ConductorKernel<Real>> fine;
    std::set<u64> done;
    for (const auto& chi : chars) {
        if (done.count(chi.label())) continue;
        auto recs = orbit_records(kernel, e, chi);
        ++out.orbits;
        const auto bad = static_cast<u64>(std::count_if(recs.begin(), recs.end(), [](const TwistRecord& r) { return !r.reliable(); }));
        out.first_pass_unreliable += bad;
        if (bad) {
            if (!fine) fine.emplace(ctx, f, digits + kRetryExtraDigits);
            recs = orbit_records(*fine, e, chi);
            ++out.retried;
        }
        for (auto& r : recs) {
            done.insert(r.label);
            out.unreliable += r.reliable() ? 0 : 1;
            out.records.push_back(r);
        }
    }
    std::sort(out.records.begin(), out.records.end(), [](const TwistRecord& a, const TwistRecord& b) { return a.label < b.label; });
    return out;
}

template <class Real>
void sweep_chunk(const SeriesContext<Real>& ctx, const CurveData& e, const std::vector<u64>& fs, u64 k, int digits,
                 unsigned jobs, std::vector<ConductorResult>& results) {
    results.assign(fs.size(), {});
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < fs.size();) {
            try {
                results[i] = sweep_conductor(ctx, e, fs[i], k, digits);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!err) err = std::current_exception();
                next = fs.size();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

template <class Real>
SweepReport run_sweep_impl(const SweepConfig& cfg, Store& store, SweepReport rep) {
    const CurveData& e = cfg.curve;
    const u64 need = std::max<u64>(required_terms(cfg.max_f, e.conductor, cfg.digits + kRetryExtraDigits), 2000);
    const auto tab = coefficient_table(e, need, cfg.jobs, cfg.point_count_crossover);
    rep.terms = tab.length();
    const auto w = detect_root_number(e, tab);
    if (w.w != e.root_number)
        throw ConfigError("configured root number " + std::to_string(e.root_number) + " disagrees with the detected " + std::to_string(w.w));
    const SeriesContext<Real> ctx(e, tab);
    std::vector<ConductorResult> results;
    u64 f = rep.start_f;
    while (f <= cfg.max_f) {
        const u64 block_end = (f / cfg.block_size + 1) * cfg.block_size - 1;
        const u64 hi = std::min(block_end, cfg.max_f);
        std::vector<u64> fs;
        for (u64 x = f; x <= hi; ++x) {
            if (std::gcd(x, e.conductor) == 1) fs.push_back(x);
        }
        sweep_chunk(ctx, e, fs, cfg.k, cfg.digits, cfg.jobs, results);
        std::vector<TwistRecord> rows;
        u64 retried = 0, unreliable = 0;
        for (const auto& r : results) {
            rows.insert(rows.end(), r.records.begin(), r.records.end());
            rep.orbits += r.orbits;
            rep.first_pass_unreliable += r.first_pass_unreliable;
            retried += r.retried;
            unreliable += r.unreliable;
        }
        store.append(rows, hi, retried, unreliable);
        rep.conductors += fs.size();
        rep.records += rows.size();
        rep.retried_orbits += retried;
        rep.unreliable += unreliable;
        rep.watermark = hi;
        f = hi + 1;
        if (f <= cfg.max_f && cfg.stop && cfg.stop(hi)) break;
    }
    rep.completed = rep.watermark >= cfg.max_f;
    rep.normalization_g = store.manifest().normalization_g;
    return rep;
}

}  // namespace detail

/// Sweeps conductors in [min_f, max_f] coprime to N into the store, resuming from its watermark.
/// Output is independent of jobs and of where a previous run was interrupted.
inline SweepReport run_sweep(const SweepConfig& cfg) {
    check_sweep_config(cfg);
    Manifest m;
    m.curve = cfg.curve;
    m.k = cfg.k;
    m.min_f = cfg.min_f;
    m.max_f = cfg.max_f;
    m.digits = cfg.digits;
    m.extended_precision = cfg.extended_precision;
    m.block_size = cfg.block_size;
    std::optional<Store> store;
    if (Store::exists(cfg.store)) {
        if (!cfg.resume) throw ConfigError("store exists at " + cfg.store.string() + "; pass --resume to continue it");
        store.emplace(Store::open(cfg.store));
        const Manifest& old = store->manifest();
        auto mismatch = [](const std::string& what) { throw ConfigError("resume: " + what + " differs from the store"); };
        if (old.curve.label != m.curve.label || old.curve.ainvs != m.curve.ainvs) mismatch("curve");
        if (old.k != m.k) mismatch("order k");
        if (old.min_f != m.min_f) mismatch("min conductor");
        if (old.digits != m.digits) mismatch("digits");
        if (old.extended_precision != m.extended_precision) mismatch("precision");
        if (old.block_size != m.block_size) mismatch("block size");
        if (cfg.max_f > old.max_f) store->set_max_f(cfg.max_f);
    } else {
        store.emplace(Store::create(cfg.store, m));
    }
    SweepReport rep;
    rep.watermark = store->manifest().watermark;
    rep.start_f = rep.watermark + 1;
    rep.normalization_g = store->manifest().normalization_g;
    if (rep.start_f > cfg.max_f) {
        rep.completed = true;
        return rep;
    }
    return cfg.extended_precision ? detail::run_sweep_impl<long double>(cfg, *store, rep)
                                  : detail::run_sweep_impl<double>(cfg, *store, rep);
}

// ---------------------------------------------------------------------------
// Verification

inline constexpr double kReflectionTolerance = 1e-8;

struct VerifyIssue {
    std::string check;
    u64 f = 0;
    u64 label = 0;
    std::string detail;
};

struct VerifyReport {
    u64 records = 0;
    u64 orbits = 0;
    i64 g = 0;
    double max_reflection = 0;
    double max_residual = 0;
    std::vector<std::string> checks;  // names run, in order
    std::vector<VerifyIssue> issues;

    bool ok() const { return issues.empty(); }
    u64 count(const std::string& check) const {
        return static_cast<u64>(std::count_if(issues.begin(), issues.end(), [&](const VerifyIssue& i) { return i.check == check; }));
    }
};

/// Reflection, integrality, orbit consistency, zero sets, the k = 5 norm set, and
/// per-conductor counts against the character count up to the watermark.
inline VerifyReport verify_records(const Manifest& m, const std::vector<TwistRecord>& records) {
    VerifyReport rep;
    rep.records = records.size();
    rep.checks = {"watermark", "count", "reflection", "integrality", "orbit", "zero_set"};
    if (m.k == 5) rep.checks.push_back("norm_set");
    const CurveData& e = m.curve;
    const u64 k = m.k;
    auto issue = [&](const std::string& c, u64 f, u64 label, std::string d) { rep.issues.push_back({c, f, label, std::move(d)}); };

    // counts per conductor
    std::map<u64, u64> per_f;
    for (const auto& r : records) {
        if (r.k != k) issue("count", r.f, r.label, "order " + std::to_string(r.k) + " in a k = " + std::to_string(k) + " store");
        if (r.f > m.watermark) issue("watermark", r.f, r.label, "record above the watermark " + std::to_string(m.watermark));
        else ++per_f[r.f];
    }
    u64 expected_total = 0;
    if (m.watermark >= m.min_f) {
        const auto cc = count_characters(k, e.conductor, m.min_f, m.watermark);
        expected_total = cc.cumulative;
        std::map<u64, u64> want;
        for (const auto& pc : cc.per_conductor) want[pc.conductor] = pc.count;
        for (const auto& [f, n] : want) {
            const u64 have = per_f.count(f) ? per_f[f] : 0;
            if (have != n)
                issue("watermark", f, 0, std::to_string(have) + " records for " + std::to_string(n) + " characters at a conductor below the watermark");
        }
        for (const auto& [f, n] : per_f) {
            if (!want.count(f)) issue("watermark", f, 0, "records at a conductor with no characters of this order");
        }
    }
    u64 below = 0;
    for (const auto& [f, n] : per_f) below += n;
    if (below != expected_total)
        issue("count", 0, 0, std::to_string(below) + " records up to the watermark, character count gives " + std::to_string(expected_total));

    // orbit grouping
    std::map<std::pair<u64, u64>, std::vector<const TwistRecord*>> orbits;
    for (const auto& r : records) {
        if (r.k != k || r.f < 2 || std::gcd(r.f, e.conductor) != 1) continue;
        orbits[{r.f, orbit_key(r.f, r.label, k)}].push_back(&r);
    }
    rep.orbits = orbits.size();
    const u64 size = euler_phi(k);
    const auto reps = real_subfield_representatives(k);
    std::vector<i64> all_A;
    for (const auto& [key, members] : orbits) {
        const u64 f = key.first;
        std::map<u64, const TwistRecord*> by_label;
        for (const auto* r : members) by_label[r->label] = r;
        std::string problem;
        if (members.size() != size || by_label.size() != size) problem = "orbit has " + std::to_string(members.size()) + " members";
        const i64 A = members.front()->A;
        bool any_large = false;
        for (const auto* r : members) {
            const PrimitiveCharacter chi = character_from_label(f, r->label, k);
            TwistRecord full = *r;
            full.zeta_exp = zeta_exponent(e, chi);
            const double refl = std::abs(r->L_alg) >= kZeroThreshold ? reflection_residual(full) : 0;
            rep.max_reflection = std::max(rep.max_reflection, refl);
            if (!(refl < kReflectionTolerance)) issue("reflection", f, r->label, "relative residual " + format_double(refl));
            rep.max_residual = std::max(rep.max_residual, r->residual);
            if (!(r->residual < kIntegralityTolerance)) issue("integrality", f, r->label, "residual " + format_double(r->residual));
            any_large = any_large || std::abs(r->L_alg) >= kZeroThreshold;
            if (problem.empty() && r->A != A) problem = "A differs across the orbit (" + std::to_string(A) + " vs " + std::to_string(r->A) + ")";
            if (problem.empty()) {
                double prod = 1;
                for (u64 s : reps) {
                    const auto it = by_label.find(chi.power(s).label());
                    prod *= it == by_label.end() ? std::numeric_limits<double>::quiet_NaN() : it->second->alpha;
                }
                if (!(std::abs(prod - static_cast<double>(r->A)) < kIntegralityTolerance))
                    problem = "stored alphas give " + format_double(prod) + " for label " + std::to_string(r->label) + ", A = " + std::to_string(r->A);
            }
        }
        if (!problem.empty()) issue("orbit", f, members.front()->label, problem);
        if ((A == 0) == any_large) issue("zero_set", f, members.front()->label, any_large ? "A = 0 with a non-vanishing member" : "A != 0 with every member vanishing");
        all_A.push_back(A);
    }
    for (i64 a : all_A) rep.g = std::gcd(rep.g, a < 0 ? -a : a);
    if (m.normalization_g != rep.g)
        issue("count", 0, 0, "manifest gcd " + std::to_string(m.normalization_g) + " but records give " + std::to_string(rep.g));
    if (k == 5 && rep.g > 0) {
        for (const auto& [key, members] : orbits) {
            const i64 a = members.front()->A;
            const u64 n = static_cast<u64>((a < 0 ? -a : a) / rep.g);
            if (!is_golden_norm_value(n)) issue("norm_set", key.first, members.front()->label, "|A|/g = " + std::to_string(n) + " is not a norm");
        }
    }
    return rep;
}

/// Checksums first, then every record check; reads the committed rows even when a checksum fails.
inline VerifyReport verify_store(const std::filesystem::path& dir) {
    const Store s = Store::open_readonly(dir);
    std::vector<TwistRecord> recs;
    std::vector<VerifyIssue> pre;
    for (const auto& i : s.check()) pre.push_back({"checksum", 0, 0, i.file + ": " + i.detail});
    try {
        recs = s.read_all();
    } catch (const StoreError& ex) {
        pre.push_back({"checksum", 0, 0, ex.what()});
    }
    auto rep = verify_records(s.manifest(), recs);
    rep.checks.insert(rep.checks.begin(), "checksum");
    rep.issues.insert(rep.issues.begin(), pre.begin(), pre.end());
    return rep;
}

/// Records with A divided by the stored gcd, for the statistics.
inline std::vector<TwistRecord> normalized_records(const Store& s) {
    auto recs = s.read_all();
    const i64 g = s.manifest().normalization_g;
    if (g > 1) {
        for (auto& r : recs) r.A /= g;
    }
    return recs;
}

}  // namespace twistval
