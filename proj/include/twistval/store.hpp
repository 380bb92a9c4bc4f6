#pragma once

// On-disk record store: append-only CSV shards per conductor block plus a JSON manifest.
//
// Layout:
//   <dir>/manifest.json
//   <dir>/shard_<block>.csv   block b holds conductors in [b*B, (b+1)*B)
//
// Every write goes to a temporary file that is renamed into place. The manifest records
// the committed byte length and crc32 of each shard, so bytes past that length are an
// interrupted append and are dropped on recovery, while a bad prefix is corruption.

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "format.hpp"
#include "lvalue.hpp"

namespace twistval {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kStoreFormat = 1;
inline constexpr const char* kRecordHeader = "f,label,k,re_L,im_L,re_Lalg,im_Lalg,case,alpha,A,residual,T";

class StoreError : public Error {
public:
    using Error::Error;
};

inline std::uint32_t crc32_of(std::string_view data, std::uint32_t crc = 0) {
    uLong c = crc;
    while (!data.empty()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size(), 1u << 30));
        c = ::crc32(c, reinterpret_cast<const Bytef*>(data.data()), chunk);
        data.remove_prefix(chunk);
    }
    return static_cast<std::uint32_t>(c);
}

// ---------------------------------------------------------------------------
// Rows

inline std::string format_record(const TwistRecord& r) {
    std::string s;
    s += std::to_string(r.f) + ',' + std::to_string(r.label) + ',' + std::to_string(r.k) + ',';
    s += format_double(r.L.real()) + ',' + format_double(r.L.imag()) + ',';
    s += format_double(r.L_alg.real()) + ',' + format_double(r.L_alg.imag()) + ',';
    s += to_string(r.lambda_case) + ',' + format_double(r.alpha) + ',' + std::to_string(r.A) + ',';
    s += format_double(r.residual) + ',' + std::to_string(r.T);
    return s;
}

namespace detail {

template <class Int>
Int parse_int(std::string_view s, const char* what) {
    Int v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw StoreError(std::string("bad ") + what + " field '" + std::string(s) + "'");
    return v;
}

inline double parse_double(std::string_view s, const char* what) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw StoreError(std::string("bad ") + what + " field '" + tmp + "'");
    return v;
}

}  // namespace detail

/// Inverse of format_record. Fields not stored (zeta exponent, lambda, pre-round value) are left default.
inline TwistRecord parse_record(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto c = split_csv_line(line);
    if (c.size() != 12) throw StoreError("record has " + std::to_string(c.size()) + " fields, expected 12");
    TwistRecord r;
    r.f = detail::parse_int<u64>(c[0], "f");
    r.label = detail::parse_int<u64>(c[1], "label");
    r.k = detail::parse_int<u64>(c[2], "k");
    r.L = {detail::parse_double(c[3], "re_L"), detail::parse_double(c[4], "im_L")};
    r.L_alg = {detail::parse_double(c[5], "re_Lalg"), detail::parse_double(c[6], "im_Lalg")};
    try {
        r.lambda_case = lambda_case_from_string(std::string(c[7]));
    } catch (const Error&) {
        throw StoreError("bad case field '" + std::string(c[7]) + "'");
    }
    r.alpha = detail::parse_double(c[8], "alpha");
    r.A = detail::parse_int<i64>(c[9], "A");
    r.residual = detail::parse_double(c[10], "residual");
    r.T = detail::parse_int<u64>(c[11], "T");
    return r;
}

/// Header line followed by one row per record.
inline std::vector<TwistRecord> parse_record_csv(std::string_view text) {
    std::vector<TwistRecord> out;
    bool header = true;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (header) {
            if (line != kRecordHeader) throw StoreError("unexpected header '" + std::string(line) + "'");
            header = false;
            continue;
        }
        if (line.empty()) continue;
        try {
            out.push_back(parse_record(line));
        } catch (const StoreError& ex) {
            throw StoreError("line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    if (header) throw StoreError("missing header");
    return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct ShardInfo {
    u64 block = 0;
    std::string file;
    u64 rows = 0;
    u64 bytes = 0;
    std::uint32_t crc32 = 0;
};

struct Manifest {
    int format = kStoreFormat;
    std::string tool_version = kToolVersion;
    CurveData curve;
    u64 k = 0;
    u64 min_f = 2;
    u64 max_f = 0;
    int digits = 8;
    bool extended_precision = false;
    u64 block_size = 1000;
    u64 watermark = 0;        // every conductor in [min_f, watermark] is complete
    i64 normalization_g = 0;  // gcd of nonzero |A|, 0 while all are zero
    u64 records = 0;
    u64 retried_orbits = 0;
    u64 unreliable_records = 0;
    nlohmann::json seeds = nlohmann::json::object();
    std::vector<ShardInfo> shards;
};

inline nlohmann::json manifest_to_json(const Manifest& m, bool with_shards = true) {
    nlohmann::json j;
    j["format"] = m.format;
    j["tool_version"] = m.tool_version;
    j["curve"] = curve_to_json(m.curve);
    j["k"] = m.k;
    j["min_f"] = m.min_f;
    j["max_f"] = m.max_f;
    j["digits"] = m.digits;
    j["extended_precision"] = m.extended_precision;
    j["block_size"] = m.block_size;
    j["watermark"] = m.watermark;
    j["normalization_g"] = m.normalization_g;
    j["records"] = m.records;
    j["retried_orbits"] = m.retried_orbits;
    j["unreliable_records"] = m.unreliable_records;
    j["seeds"] = m.seeds;
    if (with_shards) {
        j["shards"] = nlohmann::json::array();
        for (const auto& s : m.shards) {
            j["shards"].push_back({{"block", s.block}, {"file", s.file}, {"rows", s.rows}, {"bytes", s.bytes}, {"crc32", s.crc32}});
        }
    }
    return j;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    try {
        Manifest m;
        m.format = j.at("format").get<int>();
        if (m.format != kStoreFormat) throw StoreError("unsupported store format " + std::to_string(m.format));
        m.tool_version = j.at("tool_version").get<std::string>();
        m.curve = curve_from_json(j.at("curve"));
        m.k = j.at("k").get<u64>();
        m.min_f = j.at("min_f").get<u64>();
        m.max_f = j.at("max_f").get<u64>();
        m.digits = j.at("digits").get<int>();
        m.extended_precision = j.at("extended_precision").get<bool>();
        m.block_size = j.at("block_size").get<u64>();
        m.watermark = j.at("watermark").get<u64>();
        m.normalization_g = j.at("normalization_g").get<i64>();
        m.records = j.at("records").get<u64>();
        m.retried_orbits = j.at("retried_orbits").get<u64>();
        m.unreliable_records = j.at("unreliable_records").get<u64>();
        m.seeds = j.at("seeds");
        if (j.contains("shards")) {
            for (const auto& s : j.at("shards")) {
                m.shards.push_back({s.at("block").get<u64>(), s.at("file").get<std::string>(), s.at("rows").get<u64>(),
                                    s.at("bytes").get<u64>(), s.at("crc32").get<std::uint32_t>()});
            }
        }
        if (m.block_size == 0) throw StoreError("block_size must be positive");
        return m;
    } catch (const nlohmann::json::exception& ex) {
        throw StoreError(std::string("malformed manifest: ") + ex.what());
    }
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StoreError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write to <p>.tmp, then rename over p.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view data) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw StoreError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

struct StoreIssue {
    std::string file;
    std::string detail;
};

class Store {
public:
    static constexpr const char* kManifestName = "manifest.json";

    static bool exists(const std::filesystem::path& dir) { return std::filesystem::exists(dir / kManifestName); }

    /// New empty store; refuses to overwrite an existing one.
    static Store create(const std::filesystem::path& dir, Manifest m) {
        if (exists(dir)) throw StoreError("store already exists at " + dir.string());
        std::filesystem::create_directories(dir);
        m.shards.clear();
        m.records = 0;
        m.watermark = m.min_f - 1;
        Store s(dir, std::move(m));
        s.write_manifest();
        return s;
    }

    /// Opens for appending. An uncommitted shard tail is truncated and stray shards removed;
    /// a committed prefix that fails its checksum is an error.
    static Store open(const std::filesystem::path& dir) {
        Store s = open_readonly(dir);
        const auto issues = s.check();
        if (!issues.empty()) throw StoreError("checksum mismatch in " + issues.front().file + ": " + issues.front().detail);
        for (const auto& sh : s.m_.shards) {
            const auto p = dir / sh.file;
            if (std::filesystem::file_size(p) > sh.bytes) std::filesystem::resize_file(p, sh.bytes);
        }
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            const bool shard_like = name.rfind("shard_", 0) == 0;
            const bool tmp = name.size() > 4 && name.substr(name.size() - 4) == ".tmp";
            if (tmp || (shard_like && !s.owns(name))) std::filesystem::remove(entry.path());
        }
        return s;
    }

    static Store open_readonly(const std::filesystem::path& dir) {
        if (!exists(dir)) throw StoreError("no store at " + dir.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(dir / kManifestName));
        } catch (const nlohmann::json::parse_error& ex) {
            throw StoreError(std::string("manifest is not valid JSON: ") + ex.what());
        }
        return Store(dir, manifest_from_json(j));
    }

    const Manifest& manifest() const { return m_; }
    const std::filesystem::path& dir() const { return dir_; }

    /// Committed prefixes versus the manifest checksums.
    std::vector<StoreIssue> check() const {
        std::vector<StoreIssue> out;
        for (const auto& sh : m_.shards) {
            const auto p = dir_ / sh.file;
            if (!std::filesystem::exists(p)) {
                out.push_back({sh.file, "missing"});
                continue;
            }
            const std::string data = read_file(p);
            if (data.size() < sh.bytes) {
                out.push_back({sh.file, "truncated: " + std::to_string(data.size()) + " of " + std::to_string(sh.bytes) + " bytes"});
                continue;
            }
            const auto crc = crc32_of(std::string_view(data).substr(0, sh.bytes));
            if (crc != sh.crc32) out.push_back({sh.file, "crc32 " + std::to_string(crc) + " != " + std::to_string(sh.crc32)});
        }
        return out;
    }

    /// Committed records in (f, label) order.
    std::vector<TwistRecord> read_all() const {
        std::vector<TwistRecord> out;
        for (const auto& sh : m_.shards) {
            const std::string data = read_file(dir_ / sh.file);
            auto recs = parse_record_csv(std::string_view(data).substr(0, std::min<std::size_t>(sh.bytes, data.size())));
            out.insert(out.end(), recs.begin(), recs.end());
        }
        return out;
    }

    /// Appends rows (sorted, all above the watermark) and advances the watermark in one commit.
    void append(const std::vector<TwistRecord>& rows, u64 new_watermark, u64 retried = 0, u64 unreliable = 0) {
        if (new_watermark < m_.watermark) throw StoreError("watermark cannot move backwards");
        std::map<u64, std::string> pending;
        u64 prev_f = 0, prev_label = 0;
        for (const auto& r : rows) {
            if (r.f <= m_.watermark || r.f > new_watermark) throw StoreError("record conductor outside the appended range");
            if (r.f < prev_f || (r.f == prev_f && r.label <= prev_label)) throw StoreError("records must be sorted by (f, label)");
            prev_f = r.f;
            prev_label = r.label;
            pending[r.f / m_.block_size] += format_record(r) + '\n';
        }
        for (const auto& [block, text] : pending) {
            ShardInfo* sh = find(block);
            std::string data;
            if (sh) {
                data = read_file(dir_ / sh->file);
                data.resize(sh->bytes);
            } else {
                m_.shards.push_back({block, shard_name(block), 0, 0, 0});
                std::sort(m_.shards.begin(), m_.shards.end(), [](const ShardInfo& a, const ShardInfo& b) { return a.block < b.block; });
                sh = find(block);
                data = std::string(kRecordHeader) + '\n';
            }
            data += text;
            write_file_atomic(dir_ / sh->file, data);
            sh->bytes = data.size();
            sh->crc32 = crc32_of(data);
            sh->rows += static_cast<u64>(std::count(text.begin(), text.end(), '\n'));
        }
        for (const auto& r : rows) m_.normalization_g = std::gcd(m_.normalization_g, r.A < 0 ? -r.A : r.A);
        m_.records += rows.size();
        m_.retried_orbits += retried;
        m_.unreliable_records += unreliable;
        m_.watermark = new_watermark;
        write_manifest();
    }

    /// Range end bookkeeping without new rows.
    void set_max_f(u64 max_f) {
        m_.max_f = max_f;
        write_manifest();
    }

    static std::string shard_name(u64 block) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "shard_%06llu.csv", static_cast<unsigned long long>(block));
        return buf;
    }

private:
    Store(std::filesystem::path dir, Manifest m) : dir_(std::move(dir)), m_(std::move(m)) {}

    ShardInfo* find(u64 block) {
        for (auto& s : m_.shards) {
            if (s.block == block) return &s;
        }
        return nullptr;
    }

    bool owns(const std::string& name) const {
        for (const auto& s : m_.shards) {
            if (s.file == name) return true;
        }
        return false;
    }

    void write_manifest() { write_file_atomic(dir_ / kManifestName, manifest_to_json(m_).dump(2) + '\n'); }

    std::filesystem::path dir_;
    Manifest m_;
};

// ---------------------------------------------------------------------------
// Export / import

/// Single CSV of every committed record, plus the manifest without shard bookkeeping.
struct ExportBundle {
    std::string csv;
    std::string metadata;  // JSON
};

inline ExportBundle export_store(const Store& s) {
    const auto issues = s.check();
    if (!issues.empty()) throw StoreError("checksum mismatch in " + issues.front().file + ": " + issues.front().detail);
    ExportBundle b;
    b.csv = std::string(kRecordHeader) + '\n';
    for (const auto& r : s.read_all()) b.csv += format_record(r) + '\n';
    b.metadata = manifest_to_json(s.manifest(), false).dump(2) + '\n';
    return b;
}

/// Rebuilds a store from an export; the rows keep their original order and bytes.
inline Store import_store(const std::filesystem::path& dir, const ExportBundle& b) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(b.metadata);
    } catch (const nlohmann::json::parse_error& ex) {
        throw StoreError(std::string("export metadata is not valid JSON: ") + ex.what());
    }
    Manifest m = manifest_from_json(j);
    const u64 watermark = m.watermark;
    const u64 retried = m.retried_orbits, unreliable = m.unreliable_records;
    const i64 g = m.normalization_g;
    m.retried_orbits = 0;
    m.unreliable_records = 0;
    m.normalization_g = 0;
    const auto rows = parse_record_csv(b.csv);
    for (const auto& r : rows) {
        if (r.k != m.k) throw StoreError("export row order does not match metadata");
    }
    Store s = Store::create(dir, m);
    s.append(rows, watermark, retried, unreliable);
    if (s.manifest().normalization_g != g) throw StoreError("export normalization does not match its rows");
    return s;
}

}  // namespace twistval
