#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "twistval/sweep.hpp"

using namespace twistval;
using testutil::TempDir;

namespace {

SweepConfig config(const std::filesystem::path& store, u64 max_f, u64 k = 3, const std::string& curve = "11a1") {
    SweepConfig c;
    c.curve = curve_fixture(curve);
    c.k = k;
    c.max_f = max_f;
    c.digits = 8;
    c.block_size = 100;
    c.store = store;
    return c;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) out[e.path().filename().string()] = read_file(e.path());
    return out;
}

void rewrite_shards(const std::filesystem::path& dir, const std::function<void(std::vector<TwistRecord>&)>& edit,
                    bool fix_checksums) {
    Store s = Store::open_readonly(dir);
    auto recs = s.read_all();
    edit(recs);
    std::map<u64, std::string> text;
    const u64 B = s.manifest().block_size;
    for (const auto& r : recs) text[r.f / B] += format_record(r) + '\n';
    auto j = manifest_to_json(s.manifest());
    for (auto& sh : j["shards"]) {
        const std::string data = std::string(kRecordHeader) + '\n' + text[sh["block"].get<u64>()];
        write_file_atomic(dir / sh["file"].get<std::string>(), data);
        if (fix_checksums) {
            sh["bytes"] = data.size();
            sh["crc32"] = crc32_of(data);
        }
    }
    write_file_atomic(dir / "manifest.json", j.dump(2) + '\n');
}

}  // namespace

TEST(Sweep, ConductorsMatchEnumeration) {
    TempDir dir("sweep_enum");
    const auto rep = run_sweep(config(dir / "s", 100));
    EXPECT_TRUE(rep.completed);
    EXPECT_EQ(rep.watermark, 100u);
    const auto recs = Store::open_readonly(dir / "s").read_all();
    const auto chars = enumerate_characters(3, 11, 2, 100);
    ASSERT_EQ(recs.size(), chars.size());
    std::set<u64> conductors;
    for (const auto& r : recs) conductors.insert(r.f);
    const std::set<u64> expect{7, 9, 13, 19, 31, 37, 43, 61, 63, 67, 73, 79, 91, 97};
    EXPECT_EQ(conductors, expect);
    for (std::size_t i = 1; i < recs.size(); ++i) {
        EXPECT_TRUE(recs[i - 1].f < recs[i].f || (recs[i - 1].f == recs[i].f && recs[i - 1].label < recs[i].label));
    }
    EXPECT_EQ(recs.front().f, 7u);
    EXPECT_EQ(recs.front().A, 10);
    EXPECT_EQ(rep.unreliable, 0u);
}

TEST(Sweep, EmptyRangeIsNoOp) {
    TempDir dir("sweep_empty");
    auto c = config(dir / "s", 6);
    c.min_f = 2;
    const auto rep = run_sweep(c);
    EXPECT_TRUE(rep.completed);
    EXPECT_EQ(rep.records, 0u);
    const Store s = Store::open_readonly(dir / "s");
    EXPECT_TRUE(s.read_all().empty());
    EXPECT_EQ(s.manifest().watermark, 6u);
    EXPECT_TRUE(verify_store(dir / "s").ok());
}

TEST(Sweep, RerunIsByteIdenticalNoOp) {
    TempDir dir("sweep_rerun");
    auto c = config(dir / "s", 300);
    run_sweep(c);
    const auto before = snapshot(dir / "s");
    c.resume = true;
    const auto rep = run_sweep(c);
    EXPECT_EQ(rep.records, 0u);
    EXPECT_EQ(snapshot(dir / "s"), before);
}

TEST(Sweep, InterruptAndResumeMatchesUninterrupted) {
    TempDir dir("sweep_resume");
    run_sweep(config(dir / "whole", 450));

    auto c = config(dir / "part", 450);
    int chunks = 0;
    c.stop = [&](u64) { return ++chunks == 2; };
    const auto first = run_sweep(c);
    EXPECT_FALSE(first.completed);
    EXPECT_EQ(first.watermark, 199u);
    c.stop = nullptr;
    c.resume = true;
    const auto second = run_sweep(c);
    EXPECT_TRUE(second.completed);
    EXPECT_EQ(second.start_f, 200u);
    EXPECT_EQ(snapshot(dir / "part"), snapshot(dir / "whole"));
}

TEST(Sweep, ExtendingTheRangeMatchesOneRun) {
    TempDir dir("sweep_extend");
    run_sweep(config(dir / "whole", 420));
    auto c = config(dir / "grow", 250);
    run_sweep(c);
    c.max_f = 420;
    c.resume = true;
    run_sweep(c);
    EXPECT_EQ(snapshot(dir / "grow"), snapshot(dir / "whole"));
}

TEST(Sweep, JobsDoNotChangeOutput) {
    TempDir dir("sweep_jobs");
    run_sweep(config(dir / "one", 400, 3, "14a1"));
    auto c = config(dir / "many", 400, 3, "14a1");
    c.jobs = 3;
    run_sweep(c);
    EXPECT_EQ(snapshot(dir / "one"), snapshot(dir / "many"));
}

TEST(Sweep, ConfigErrors) {
    TempDir dir("sweep_cfg");
    run_sweep(config(dir / "s", 100));
    EXPECT_THROW(run_sweep(config(dir / "s", 200)), ConfigError);  // exists, no resume
    auto c = config(dir / "s", 200, 5);
    c.resume = true;
    EXPECT_THROW(run_sweep(c), ConfigError);
    c = config(dir / "s", 200, 3, "14a1");
    c.resume = true;
    EXPECT_THROW(run_sweep(c), ConfigError);
    c = config(dir / "t", 100, 4);
    EXPECT_THROW(run_sweep(c), ConfigError);
    c = config(dir / "t", 1);
    EXPECT_THROW(run_sweep(c), ConfigError);
    c = config(dir / "t", 100);
    c.digits = 14;
    EXPECT_THROW(run_sweep(c), ConfigError);
    c = config(dir / "t", 100);
    c.curve.root_number = -1;
    EXPECT_THROW(run_sweep(c), ConfigError);
}

TEST(Sweep, CorruptStoreRefusesToResume) {
    TempDir dir("sweep_corrupt");
    auto c = config(dir / "s", 250);
    run_sweep(c);
    rewrite_shards(dir / "s", [](std::vector<TwistRecord>& r) { r[3].A += 1; }, false);
    c.resume = true;
    c.max_f = 400;
    EXPECT_THROW(run_sweep(c), StoreError);
}

TEST(Verify, FreshStoreIsClean) {
    TempDir dir("verify_fresh");
    run_sweep(config(dir / "s", 500));
    const auto rep = verify_store(dir / "s");
    for (const auto& i : rep.issues) ADD_FAILURE() << i.check << " f=" << i.f << " " << i.detail;
    EXPECT_TRUE(rep.ok());
    EXPECT_GT(rep.records, 100u);
    EXPECT_EQ(rep.orbits * 2, rep.records);
    EXPECT_LT(rep.max_reflection, 1e-8);
    EXPECT_EQ(rep.g, Store::open_readonly(dir / "s").manifest().normalization_g);
}

TEST(Verify, OnePerturbedAGivesOneOrbitFailure) {
    TempDir dir("verify_perturb");
    run_sweep(config(dir / "s", 500));
    rewrite_shards(dir / "s", [](std::vector<TwistRecord>& r) {
        for (auto& x : r) {
            if (x.A > 0) {
                x.A += 1;
                return;
            }
        }
    }, true);
    const auto rep = verify_store(dir / "s");
    EXPECT_EQ(rep.count("orbit"), 1u);
    EXPECT_EQ(rep.count("checksum"), 0u);
    EXPECT_EQ(rep.count("integrality"), 0u);
    EXPECT_EQ(rep.count("watermark"), 0u);
}

TEST(Verify, TruncatedFinalConductorFlagsWatermark) {
    TempDir dir("verify_trunc");
    run_sweep(config(dir / "s", 500));
    u64 last = 0;
    rewrite_shards(dir / "s", [&](std::vector<TwistRecord>& r) {
        last = r.back().f;
        r.pop_back();
    }, true);
    const auto rep = verify_store(dir / "s");
    ASSERT_GE(rep.count("watermark"), 1u);
    bool found = false;
    for (const auto& i : rep.issues) found = found || (i.check == "watermark" && i.f == last);
    EXPECT_TRUE(found);
    EXPECT_GE(rep.count("orbit"), 1u);

    // the same damage without fixing checksums is caught there too
    TempDir dir2("verify_trunc_raw");
    run_sweep(config(dir2 / "s", 500));
    rewrite_shards(dir2 / "s", [](std::vector<TwistRecord>& r) { r.pop_back(); }, false);
    const auto raw = verify_store(dir2 / "s");
    EXPECT_GE(raw.count("checksum"), 1u);
    EXPECT_GE(raw.count("watermark"), 1u);
}

TEST(Verify, NormSetForQuinticTwists) {
    TempDir dir("verify_k5");
    run_sweep(config(dir / "s", 400, 5));
    const auto rep = verify_store(dir / "s");
    for (const auto& i : rep.issues) ADD_FAILURE() << i.check << " f=" << i.f << " " << i.detail;
    EXPECT_NE(std::find(rep.checks.begin(), rep.checks.end(), "norm_set"), rep.checks.end());
    EXPECT_GT(rep.orbits, 5u);
}

TEST(Verify, DetectsBadNormValue) {
    Manifest m;
    m.curve = curve_fixture("11a1");
    m.k = 5;
    m.min_f = 2;
    m.watermark = 1;
    auto orbit_at = [](u64 f, i64 A) {
        std::vector<TwistRecord> out;
        for (const auto& chi : characters_of_conductor(f, 5)) {
            TwistRecord r;
            r.f = f;
            r.label = chi.label();
            r.k = 5;
            r.A = A;
            out.push_back(r);
        }
        return out;
    };
    auto recs = orbit_at(31, 3);
    ASSERT_EQ(recs.size(), 4u);
    const auto rep = verify_records(m, recs);
    EXPECT_EQ(rep.g, 3);
    EXPECT_EQ(rep.count("norm_set"), 0u);  // |A|/g = 1
    const auto two = orbit_at(41, 6);
    recs.insert(recs.end(), two.begin(), two.end());
    EXPECT_EQ(verify_records(m, recs).count("norm_set"), 1u);  // 6/3 = 2 is not a norm
}

TEST(Normalized, DividesByStoredGcd) {
    TempDir dir("normalized");
    run_sweep(config(dir / "s", 200));
    const Store s = Store::open_readonly(dir / "s");
    const auto raw = s.read_all();
    const auto norm = normalized_records(s);
    ASSERT_EQ(raw.size(), norm.size());
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_EQ(norm[i].A * s.manifest().normalization_g, raw[i].A);
}
