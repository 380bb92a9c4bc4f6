// twistval: command-line driver.
//
// Exit codes: 0 success, 1 verification failures, 2 usage or configuration error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "twistval/sweep.hpp"

using namespace twistval;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

/// stdout when path is "-" or empty.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_.open(path, std::ios::binary | std::ios::trunc);
        if (!file_) throw ConfigError("cannot open " + path + " for writing");
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

// ---------------------------------------------------------------------------

struct CountArgs {
    u64 order = 3;
    u64 coprime_to = 1;
    u64 max_conductor = 0;
    std::string output = "-";
};

int cmd_count(const CountArgs& a) {
    if (a.order < 2) throw ConfigError("--order must be at least 2");
    if (a.max_conductor < 2) throw ConfigError("--max-conductor must be at least 2");
    if (a.coprime_to == 0) throw ConfigError("--coprime-to must be positive");
    const auto rep = count_characters(a.order, a.coprime_to, a.max_conductor);
    Output out(a.output);
    auto& os = out.stream();
    os << "f,b_k,cumulative,comparator\n";
    u64 cum = 0;
    for (const auto& pc : rep.per_conductor) {
        cum += pc.count;
        os << pc.conductor << ',' << pc.count << ',' << cum << ','
           << format_double(rep.comparator(static_cast<double>(pc.conductor))) << '\n';
    }
    std::cerr << "B_{" << a.order << "," << a.coprime_to << "}(" << a.max_conductor << ") = " << rep.cumulative << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string curve;
    u64 order = 3;
    u64 min_f = 2;
    u64 max_f = 0;
    int digits = 8;
    unsigned jobs = 1;
    bool resume = false;
    bool extended = false;
    u64 block_size = 1000;
    std::string store;
};

int cmd_sweep(const SweepArgs& a) {
    SweepConfig c;
    c.curve = load_curve(a.curve);
    c.k = a.order;
    c.min_f = a.min_f;
    c.max_f = a.max_f;
    c.digits = a.digits;
    c.jobs = a.jobs;
    c.resume = a.resume;
    c.extended_precision = a.extended;
    c.block_size = a.block_size;
    c.store = a.store;
    c.stop = [](u64) { return g_interrupted != 0; };
    std::signal(SIGINT, on_sigint);
    const auto rep = run_sweep(c);
    std::signal(SIGINT, SIG_DFL);
    std::cerr << "conductors " << rep.conductors << ", orbits " << rep.orbits << ", records " << rep.records
              << ", retried orbits " << rep.retried_orbits << ", unreliable " << rep.unreliable << '\n';
    std::cerr << "watermark " << rep.watermark << (rep.completed ? " (complete)" : " (interrupted; rerun with --resume)")
              << ", g = " << rep.normalization_g << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string store;
    std::vector<i64> values;
    std::vector<i64> thresholds;
    std::vector<double> exponents;
    std::vector<double> grid;  // ratio [start [end]]
    std::string output_dir = ".";
};

int cmd_stats(const StatsArgs& a) {
    const Store s = Store::open_readonly(a.store);
    const auto issues = s.check();
    if (!issues.empty()) throw StoreError("checksum mismatch in " + issues.front().file + ": " + issues.front().detail);
    const Manifest& m = s.manifest();
    StatConfig cfg = StatConfig::defaults(m.k);
    if (!a.values.empty()) cfg.values = a.values;
    if (!a.thresholds.empty()) cfg.thresholds = a.thresholds;
    if (!a.exponents.empty()) cfg.exponents = a.exponents;
    if (!a.grid.empty()) cfg.grid_ratio = a.grid[0];
    if (a.grid.size() > 1) cfg.grid_start = a.grid[1];
    if (a.grid.size() > 2) cfg.grid_end = a.grid[2];
    if (a.grid.size() > 3) throw ConfigError("--grid takes RATIO [START [END]]");
    if (cfg.grid_end <= 0) cfg.grid_end = static_cast<double>(m.watermark);
    const auto st = accumulate(m.curve.label, m.k, normalized_records(s), cfg);
    std::filesystem::create_directories(a.output_dir);
    for (auto fam : {CounterFamily::n, CounterFamily::s, CounterFamily::m}) {
        const auto path = std::filesystem::path(a.output_dir) /
                          (m.curve.label + "_k" + std::to_string(m.k) + "_" + to_string(fam) + ".csv");
        std::ostringstream os;
        write_ratio_csv(os, st, fam);
        write_file_atomic(path, os.str());
        std::cerr << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
    u64 order = 3;
    double bound = 1;
    double exponent = 0;
    u64 max_conductor = 0;
    u64 coprime_to = 1;
    bool fit = false;
    double grid_ratio = 1.05;
    std::string output = "-";
};

int cmd_model(const ModelArgs& a, bool exponent_given) {
    if (a.max_conductor < 2) throw ConfigError("--max-conductor must be at least 2");
    if (!(a.grid_ratio > 1)) throw ConfigError("--grid-ratio must exceed 1");
    ModelParams p{a.order, exponent_given ? a.exponent : 0.0, static_cast<double>(a.max_conductor), a.coprime_to};
    try {
        p.check();
    } catch (const Error& ex) {
        throw ConfigError(ex.what());
    }
    std::vector<std::pair<double, double>> observed;
    if (a.fit) {
        if (exponent_given) throw ConfigError("--fit uses the fixed bound; drop --exponent");
        if (!(a.bound > 0)) throw ConfigError("--bound must be positive");
        observed = small_value_partial_sums(a.order, a.coprime_to, a.max_conductor, a.bound, a.grid_ratio);
    }
    const auto pred = predicted_count(p, observed, a.grid_ratio);
    Output out(a.output);
    auto& os = out.stream();
    os << "X,predicted,regime\n";
    for (const auto& r : pred.rows) os << format_double(r.X) << ',' << format_double(r.predicted) << ',' << to_string(pred.regime.regime) << '\n';
    std::cerr << "regime " << pred.regime.description;
    if (pred.fitted) std::cerr << ", fitted C = " << format_double(pred.C) << ", D = " << format_double(pred.D);
    std::cerr << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string store;
    std::size_t max_issues = 50;
};

int cmd_verify(const VerifyArgs& a) {
    const auto rep = verify_store(a.store);
    std::cout << "records " << rep.records << ", orbits " << rep.orbits << ", g " << rep.g
              << ", max reflection " << format_double(rep.max_reflection) << ", max residual "
              << format_double(rep.max_residual) << '\n';
    for (const auto& c : rep.checks) std::cout << (rep.count(c) ? "FAIL " : "PASS ") << c << " (" << rep.count(c) << " issues)\n";
    for (std::size_t i = 0; i < rep.issues.size() && i < a.max_issues; ++i) {
        const auto& is = rep.issues[i];
        std::cout << "  " << is.check << " f=" << is.f << " label=" << is.label << ": " << is.detail << '\n';
    }
    if (rep.issues.size() > a.max_issues) std::cout << "  ... " << rep.issues.size() - a.max_issues << " more\n";
    return rep.ok() ? kExitOk : kExitFailures;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
    std::string store;
    std::string output;
    std::string import_csv;
};

int cmd_export(const ExportArgs& a) {
    if (!a.import_csv.empty()) {
        ExportBundle b;
        b.csv = read_file(a.import_csv);
        b.metadata = read_file(a.import_csv + ".json");
        const Store s = import_store(a.store, b);
        std::cerr << "imported " << s.manifest().records << " records into " << a.store << '\n';
        return kExitOk;
    }
    if (a.output.empty()) throw ConfigError("--output is required unless --import is given");
    const auto b = export_store(Store::open_readonly(a.store));
    write_file_atomic(a.output, b.csv);
    write_file_atomic(a.output + ".json", b.metadata);
    std::cerr << "wrote " << a.output << " and " << a.output << ".json\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Algebraic central values of twisted elliptic-curve L-functions"};
    app.require_subcommand(1);

    CountArgs count;
    auto* c = app.add_subcommand("count", "Primitive characters of order k per conductor (CSV)");
    c->add_option("--order", count.order, "Character order k")->required();
    c->add_option("--coprime-to", count.coprime_to, "Only conductors coprime to this (e.g. the curve conductor)");
    c->add_option("--max-conductor", count.max_conductor, "Largest conductor X")->required();
    c->add_option("-o,--output", count.output, "Output CSV (default stdout)");

    SweepArgs sweep;
    auto* s = app.add_subcommand("sweep", "Compute twist records into a store");
    s->add_option("--curve", sweep.curve, "Fixture name (11a1, 14a1) or curve JSON path")->required();
    s->add_option("--order", sweep.order, "Character order k (odd)")->required();
    s->add_option("--min-f", sweep.min_f, "Smallest conductor");
    s->add_option("--max-f", sweep.max_f, "Largest conductor")->required();
    s->add_option("--digits", sweep.digits, "Target digits for the L-series tail");
    s->add_option("--jobs", sweep.jobs, "Worker threads");
    s->add_option("--store", sweep.store, "Store directory")->required();
    s->add_option("--block-size", sweep.block_size, "Conductors per shard and commit");
    s->add_flag("--resume", sweep.resume, "Continue an existing store from its watermark");
    s->add_flag("--extended", sweep.extended, "Long double arithmetic");

    StatsArgs stats;
    auto* st = app.add_subcommand("stats", "Counter ratio CSVs (n, s, m families) from a store");
    st->add_option("--store", stats.store, "Store directory")->required();
    st->add_option("--values", stats.values, "Values l for n(x; l)")->delimiter(',');
    st->add_option("--thresholds", stats.thresholds, "Bounds L for s(x; L)")->delimiter(',');
    st->add_option("--exponents", stats.exponents, "Exponents c for m(x; c)")->delimiter(',');
    st->add_option("--grid", stats.grid, "RATIO[,START[,END]] of the geometric grid")->delimiter(',');
    st->add_option("-o,--output-dir", stats.output_dir, "Directory for the CSVs");

    ModelArgs model;
    auto* mo = app.add_subcommand("model", "Predicted small-value counts (CSV)");
    mo->add_option("--order", model.order, "Character order k")->required();
    auto* bound_opt = mo->add_option("--bound", model.bound, "Fixed bound L on |A|");
    auto* exp_opt = mo->add_option("--exponent", model.exponent, "Growing bound |A| <= f^c");
    bound_opt->excludes(exp_opt);
    mo->add_option("--max-conductor", model.max_conductor, "Largest conductor X")->required();
    mo->add_option("--coprime-to", model.coprime_to, "Curve conductor for --fit");
    mo->add_flag("--fit", model.fit, "Fit the constants to partial sums of the character-count model");
    mo->add_option("--grid-ratio", model.grid_ratio, "Geometric grid ratio");
    mo->add_option("-o,--output", model.output, "Output CSV (default stdout)");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "Check a store; exit 1 when anything fails");
    v->add_option("--store", verify.store, "Store directory")->required();
    v->add_option("--max-issues", verify.max_issues, "Issue lines to print");

    ExportArgs exp;
    auto* e = app.add_subcommand("export", "Store to CSV (+ .json metadata), or --import back");
    e->add_option("--store", exp.store, "Store directory")->required();
    e->add_option("-o,--output", exp.output, "Output CSV path");
    e->add_option("--import", exp.import_csv, "Build a new store from an exported CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return kExitUsage;
    }

    try {
        if (*c) return cmd_count(count);
        if (*s) return cmd_sweep(sweep);
        if (*st) return cmd_stats(stats);
        if (*mo) return cmd_model(model, exp_opt->count() > 0);
        if (*v) return cmd_verify(verify);
        if (*e) return cmd_export(exp);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
