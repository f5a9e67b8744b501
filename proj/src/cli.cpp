#include "tskgen/cli.hpp"

#include "tskgen/autotuner.hpp"
#include "tskgen/codegen.hpp"
#include "tskgen/mapping.hpp"
#include "tskgen/perf_model.hpp"
#include "tskgen/simulator.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace tskgen {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::optional<std::int64_t> m, n;
    std::int64_t k = 1 << 16;
    std::string op = "tsmttsm";
    bool op_given = false;
    std::string dtype = "d";
    std::string hw;
    std::uint64_t seed = 42;
    std::string out = ".";

    std::optional<std::string> tile;
    std::optional<int> tpr, unroll;
    std::optional<std::string> reduction, c_source;
    bool leapfrog = false;
    bool transposed = false;
    bool conjugate = false;
    int block = 256;
    std::optional<int> grid;

    bool exact = false;
    int workers = 1;
    bool inject_fault = false;
    int shortlist = 10;
    std::optional<std::string> runner;
    std::string workdir = "tune_bundles";
    std::optional<std::string> csv;
    std::optional<int> top;
    std::string m_range = "1..64";
};

void add_common(CLI::App* app, Flags& f, bool needs_size) {
    if (needs_size) {
        app->add_option("--m", f.m, "Columns of A (1..64)");
        app->add_option("--n", f.n, "Columns of B / C (1..64); defaults to --m without --op");
    }
    app->add_option("--k", f.k, "Rows of the tall matrices")->capture_default_str();
    app->add_option("--op", f.op, "tsmttsm or tsmm")
        ->check(CLI::IsMember({"tsmttsm", "tsmm"}))
        ->capture_default_str()
        ->each([&f](const std::string&) { f.op_given = true; });
    app->add_option("--dtype", f.dtype, "d (real) or z (complex)")->check(CLI::IsMember({"d", "z"}))->capture_default_str();
    app->add_option("--hw", f.hw, "Hardware model file or 'default' (env TSKGEN_HW)");
    app->add_option("--seed", f.seed, "Operand seed")->capture_default_str();
    app->add_option("--out", f.out, "Output directory")->capture_default_str();
}

void add_config(CLI::App* app, Flags& f) {
    app->add_option("--tile", f.tile, "TSMTTSM tile, TMxTN");
    app->add_option("--tpr", f.tpr, "TSMM threads per row");
    app->add_option("--unroll", f.unroll, "TSMM rows per loop trip (1..4)");
    app->add_option("--reduction", f.reduction, "global, local or none");
    app->add_option("--c-source", f.c_source, "registers, shared or global");
    app->add_flag("--leapfrog", f.leapfrog, "Load the next iteration's values ahead");
    app->add_flag("--transposed", f.transposed, "Interleaved (transposed) thread mapping");
    app->add_flag("--conjugate", f.conjugate, "Conjugate A in the complex TSMTTSM transpose");
    app->add_option("--block", f.block, "Threads per block")->capture_default_str();
    app->add_option("--grid", f.grid, "Blocks (default: fill the device)");
}

HardwareModel hardware(const Flags& f) {
    std::string source = f.hw;
    if (source.empty()) {
        const char* env = std::getenv("TSKGEN_HW");
        source = env && *env ? env : "default";
    }
    return load_hardware_model(source);
}

ProblemShape shape_of(const Flags& f) {
    if (!f.m) throw UsageError("--m is required");
    // A bare size names a square problem; an explicit --op asks for both sizes.
    if (!f.n && f.op_given) throw UsageError("--n is required with --op " + f.op);
    ProblemShape s{*f.m, f.n.value_or(*f.m), f.k};
    try {
        check_shape(s);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    return s;
}

Tile parse_tile(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument("x");
        std::size_t p1 = 0, p2 = 0;
        const int tm = std::stoi(text.substr(0, x), &p1);
        const int tn = std::stoi(text.substr(x + 1), &p2);
        if (p1 != x || p2 != text.size() - x - 1 || tm < 1 || tn < 1) throw std::invalid_argument("range");
        return {tm, tn};
    } catch (const std::logic_error&) {
        throw UsageError("--tile expects TMxTN with positive sizes, got '" + text + "'");
    }
}

Reduction reduction_of(const std::string& s) {
    if (s == "global") return Reduction::GlobalAtomic;
    if (s == "local") return Reduction::LocalThenGlobalAtomic;
    return parse_reduction(s);
}

CSource c_source_of(const std::string& s) {
    if (s == "registers") return CSource::Registers;
    if (s == "shared") return CSource::SharedMemory;
    if (s == "global") return CSource::GlobalCached;
    return parse_c_source(s);
}

bool has_config_flags(const Flags& f) {
    return f.tile || f.tpr || f.unroll || f.reduction || f.c_source;
}

GridPolicy grid_of(const Flags& f) {
    return f.grid ? GridPolicy::explicit_grid(*f.grid) : GridPolicy::fill_device();
}

/// The config named by the flags; without any config flag, the best-ranked one.
KernelConfig config_of(const Flags& f, const ProblemShape& shape, ScalarKind scalar, const HardwareModel& hw,
                       std::ostream& err) {
    const Operation op = parse_operation(f.op);
    KernelConfig c;
    if (!has_config_flags(f)) {
        const auto ranked = rank(enumerate_space(shape, scalar, op, hw, f.block, grid_of(f)), hw);
        if (ranked.empty() || ranked.front().status == TuneStatus::Pruned)
            throw UsageError("no valid configuration for this shape");
        c = ranked.front().config;
        err << "note: no config flags given, using the best-ranked configuration\n";
        return c;
    }
    try {
        if (op == Operation::Tsmttsm) {
            if (f.tpr || f.unroll || f.c_source) throw UsageError("--tpr/--unroll/--c-source apply to tsmm only");
            const Tile t = f.tile ? parse_tile(*f.tile) : Tile{static_cast<int>(shape.m), static_cast<int>(shape.n)};
            c = KernelConfig::tsmttsm(t.m, t.n, f.reduction ? reduction_of(*f.reduction) : Reduction::GlobalAtomic);
            c.conjugate_a = f.conjugate;
        } else {
            if (f.tile) throw UsageError("--tile applies to tsmttsm only");
            c = KernelConfig::tsmm(f.tpr.value_or(1), f.unroll.value_or(1),
                                   f.c_source ? c_source_of(*f.c_source) : CSource::Registers);
            if (f.reduction) c.reduction = reduction_of(*f.reduction);  // rejected by validation
        }
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    c.with_leapfrog(f.leapfrog).with_transposed(f.transposed).with_block_size(f.block).with_grid(grid_of(f));
    return c;
}

ValidatedConfig validated(const Flags& f, const KernelConfig& c, const ProblemShape& shape, ScalarKind scalar,
                          const HardwareModel& hw, std::ostream& err) {
    const auto r = validate_config(c, shape, scalar, hw);
    for (const auto& w : r.warnings()) err << "warning: " << w << '\n';
    if (!r.ok()) throw UsageError(r.error_text());
    (void)f;
    return *r.value;
}

struct Context {
    Flags f;
    ProblemShape shape;
    ScalarKind scalar = ScalarKind::RealF64;
    HardwareModel hw;
};

Context context(const Flags& f, bool needs_size) {
    Context c;
    c.f = f;
    try {
        c.scalar = parse_scalar(f.dtype);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (needs_size) c.shape = shape_of(f);
    if (f.k < 1) throw UsageError("--k must be >= 1");
    c.hw = hardware(f);
    return c;
}

int cmd_generate(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, true);
    const auto vc = validated(f, config_of(f, ctx.shape, ctx.scalar, ctx.hw, err), ctx.shape, ctx.scalar, ctx.hw, err);
    const auto bundle = generate_harness(vc, f.k, f.seed);
    const auto kernel = generate_kernel(vc);
    const std::filesystem::path dir = std::filesystem::path(f.out) / bundle.kernel_name;
    bundle.write_to(dir);
    out << "kernel=" << bundle.kernel_name << '\n'
        << "directory=" << dir.string() << '\n'
        << "registers=" << vc.register_estimate << '\n'
        << "spill=" << (vc.spill ? 1 : 0) << '\n'
        << "warps_per_sm=" << vc.occupancy.warps_per_sm << '\n'
        << "occupancy=" << vc.occupancy.fraction << '\n'
        << "guards=" << kernel.meta.guard_count << '\n'
        << "grid=" << kernel.launch.grid_blocks << '\n'
        << "block=" << kernel.launch.block_size << '\n'
        << "shared_bytes=" << kernel.launch.shared_bytes << '\n';
    return kExitOk;
}

int cmd_analyze(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, true);
    const auto vc = validated(f, config_of(f, ctx.shape, ctx.scalar, ctx.hw, err), ctx.shape, ctx.scalar, ctx.hw, err);
    PredictOptions opts;
    opts.intensity_mode = f.exact ? IntensityMode::Exact : IntensityMode::Asymptotic;
    const auto report = predict_performance(vc, ctx.hw, opts);
    err << report.to_text();
    out << PerfReport::csv_header() << '\n' << report.to_csv_row() << '\n';
    return kExitOk;
}

int cmd_verify(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, true);
    auto config = config_of(f, ctx.shape, ctx.scalar, ctx.hw, err);
    if (f.inject_fault) config.fault = MappingFault::OffByOne;
    const auto vc = validated(f, config, ctx.shape, ctx.scalar, ctx.hw, err);

    bool pass = true;
    if (const auto violation = coverage_check(vc)) {
        err << "coverage: " << violation->message << '\n';
        pass = false;
    }
    const auto ops = seeded_operands(vc, f.seed);
    SimulateOptions so;
    so.workers = f.workers;
    const auto sim = simulate(vc, ops.a, ops.b_or_c, so);

    out << "kernel=" << kernel_name(vc) << '\n';
    if (sim.baseline) {
        err << "reduction none: baseline mode, results are discarded; comparison skipped\n";
        out << "comparison=skipped\n";
    } else {
        const auto ref = reference_mmm(vc.op(), ops.a, ops.b_or_c, vc.config.conjugate_a);
        const auto cmp = compare(sim.result, ref, 1e-9);
        pass = pass && cmp.pass;
        out << "max_rel_err=" << std::scientific << std::setprecision(3) << cmp.max_rel_err << std::defaultfloat << '\n'
            << "checksum=" << hex64(checksum(sim.result)) << '\n';
    }
    const auto& c = sim.counters;
    out << "fma_ops=" << c.fma_ops << '\n'
        << "elements_loaded_global=" << c.elements_loaded_global << '\n'
        << "elements_stored_global=" << c.elements_stored_global << '\n'
        << "shared_atomics=" << c.shared_atomics << '\n'
        << "global_atomics=" << c.global_atomics << '\n'
        << "load_sectors_touched=" << c.load_sectors_touched << '\n'
        << "store_sectors_touched=" << c.store_sectors_touched << '\n'
        << "store_sectors_partial=" << c.store_sectors_partial << '\n'
        << "verdict=" << (pass ? "pass" : "fail") << '\n';
    return pass ? kExitOk : kExitVerifyFailed;
}

int cmd_tune(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, true);
    const Operation op = parse_operation(f.op);
    auto ranked = rank(enumerate_space(ctx.shape, ctx.scalar, op, ctx.hw, f.block, grid_of(f)), ctx.hw);
    std::size_t live = 0;
    while (live < ranked.size() && ranked[live].status != TuneStatus::Pruned) ++live;
    if (live == 0) err << "warning: every configuration was pruned\n";
    err << ranked.size() << " configurations, " << live << " ranked\n";

    if (f.runner) {
        const auto depth = std::min<std::size_t>(live, static_cast<std::size_t>(std::max(0, f.shortlist)));
        std::vector<TuneResult> shortlist(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(depth));
        for (auto& r : shortlist) r.validated->shape.k = f.k;
        ExternalRunOptions ro;
        ro.k_rows = f.k;
        ro.seed = f.seed;
        shortlist = run_external(std::move(shortlist), f.workdir, *f.runner, ro);
        for (std::size_t i = 0; i < depth; ++i) {
            if (!shortlist[i].log.empty()) err << kernel_name(*shortlist[i].validated) << ": " << shortlist[i].log << '\n';
            ranked[i] = std::move(shortlist[i]);
        }
    }

    std::ostringstream csv;
    csv << tune_csv_header() << '\n';
    const std::size_t rows = f.top ? std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(*f.top)) : ranked.size();
    for (std::size_t i = 0; i < rows; ++i) csv << tune_csv_row(ranked[i]) << '\n';
    if (f.csv) {
        std::ofstream file(*f.csv);
        if (!file) throw ConfigError("cannot write " + *f.csv);
        file << csv.str();
    } else {
        out << csv.str();
    }
    return kExitOk;
}

std::pair<int, int> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const int v = std::stoi(text);
            return {v, v};
        }
        return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
    } catch (const std::logic_error&) {
        throw UsageError("--m-range expects A..B, got '" + text + "'");
    }
}

int cmd_sweep(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, false);
    const auto [lo, hi] = parse_range(f.m_range);
    if (lo < 1 || hi > kMaxSkinnyDim || lo > hi) throw UsageError("--m-range must lie within 1..64");
    const Operation op = parse_operation(f.op);

    std::ostringstream csv;
    csv << "size,roofline_gflops,predicted_gflops,ratio\n";
    csv << std::fixed;
    for (int s = lo; s <= hi; ++s) {
        const ProblemShape shape{s, s, f.k};
        const auto ranked = rank(enumerate_space(shape, ctx.scalar, op, ctx.hw, f.block, grid_of(f)), ctx.hw);
        if (ranked.empty() || ranked.front().status == TuneStatus::Pruned) {
            err << "warning: no valid configuration at size " << s << '\n';
            continue;
        }
        const auto& best = ranked.front().report;
        csv << s << ',' << std::setprecision(1) << best.roofline_gflops << ',' << best.predicted_gflops << ','
            << std::setprecision(4) << best.predicted_gflops / best.roofline_gflops << '\n';
    }
    if (f.csv) {
        std::ofstream file(*f.csv);
        if (!file) throw ConfigError("cannot write " + *f.csv);
        file << csv.str();
    } else {
        out << csv.str();
    }
    return kExitOk;
}

int cmd_dump_mapping(const Flags& f, std::ostream& out, std::ostream& err) {
    const auto ctx = context(f, true);
    const auto vc = validated(f, config_of(f, ctx.shape, ctx.scalar, ctx.hw, err), ctx.shape, ctx.scalar, ctx.hw, err);
    out << dump_mapping(vc);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Size-specialized tall & skinny matrix multiplication kernels", "tskgen"};
    app.require_subcommand(1);
    Flags f;

    auto* generate = app.add_subcommand("generate", "Write a kernel and harness bundle");
    add_common(generate, f, true);
    add_config(generate, f);

    auto* analyze = app.add_subcommand("analyze", "Performance model report");
    add_common(analyze, f, true);
    add_config(analyze, f);
    analyze->add_flag("--exact", f.exact, "Count the result matrix traffic in the intensity");

    auto* verify = app.add_subcommand("verify", "Simulate a config against the reference product");
    add_common(verify, f, true);
    add_config(verify, f);
    verify->add_option("--workers", f.workers, "Simulator worker threads")->capture_default_str();
    verify->add_flag("--inject-fault", f.inject_fault, "Test hook: corrupt the thread mapping");

    auto* tune = app.add_subcommand("tune", "Enumerate, prune and rank the configuration space");
    add_common(tune, f, true);
    tune->add_option("--block", f.block, "Threads per block")->capture_default_str();
    tune->add_option("--grid", f.grid, "Blocks (default: fill the device)");
    tune->add_option("--runner", f.runner, "Command run as '<runner> <bundle dir>' to measure the shortlist");
    tune->add_option("--shortlist", f.shortlist, "Entries measured with --runner")->capture_default_str();
    tune->add_option("--workdir", f.workdir, "Where bundles for --runner go")->capture_default_str();
    tune->add_option("--csv", f.csv, "Write the report here instead of standard output");
    tune->add_option("--top", f.top, "Only the first N rows");

    auto* sweep = app.add_subcommand("sweep", "Best predicted performance for M = N over a range");
    add_common(sweep, f, false);
    sweep->add_option("--m-range", f.m_range, "A..B")->capture_default_str();
    sweep->add_option("--block", f.block, "Threads per block")->capture_default_str();
    sweep->add_option("--grid", f.grid, "Blocks (default: fill the device)");
    sweep->add_option("--csv", f.csv, "Write the CSV here instead of standard output");

    auto* dump = app.add_subcommand("dump-mapping", "Text grid of result ownership");
    add_common(dump, f, true);
    add_config(dump, f);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        for (auto* sub : app.get_subcommands()) err << sub->help();
        return kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(f, out, err);
        if (*analyze) return cmd_analyze(f, out, err);
        if (*verify) return cmd_verify(f, out, err);
        if (*tune) return cmd_tune(f, out, err);
        if (*sweep) return cmd_sweep(f, out, err);
        if (*dump) return cmd_dump_mapping(f, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace tskgen
