#include "tskgen/core_model.hpp"

#include "tskgen/perf_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tskgen {

namespace {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

char scalar_code(ScalarKind s) { return s == ScalarKind::RealF64 ? 'd' : 'z'; }

ScalarKind parse_scalar(std::string_view text) {
    const auto t = lower(text);
    if (t == "d" || t == "double" || t == "real") return ScalarKind::RealF64;
    if (t == "z" || t == "complex") return ScalarKind::ComplexF64;
    throw ConfigError("unknown scalar kind '" + std::string(text) + "' (expected d or z)");
}

std::string to_string(Operation op) { return op == Operation::Tsmttsm ? "tsmttsm" : "tsmm"; }

std::string to_string(Reduction r) {
    switch (r) {
        case Reduction::None: return "none";
        case Reduction::GlobalAtomic: return "global";
        case Reduction::LocalThenGlobalAtomic: return "local";
    }
    return "?";
}

std::string to_string(CSource c) {
    switch (c) {
        case CSource::Registers: return "registers";
        case CSource::SharedMemory: return "shared";
        case CSource::GlobalCached: return "global";
    }
    return "?";
}

Operation parse_operation(std::string_view text) {
    const auto t = lower(text);
    if (t == "tsmttsm") return Operation::Tsmttsm;
    if (t == "tsmm") return Operation::Tsmm;
    throw ConfigError("unknown operation '" + std::string(text) + "' (expected tsmttsm or tsmm)");
}

Reduction parse_reduction(std::string_view text) {
    const auto t = lower(text);
    if (t == "none") return Reduction::None;
    if (t == "global" || t == "globalatomic") return Reduction::GlobalAtomic;
    if (t == "local" || t == "localthenglobal" || t == "localthenglobalatomic")
        return Reduction::LocalThenGlobalAtomic;
    throw ConfigError("unknown reduction '" + std::string(text) + "' (expected none, global or local)");
}

CSource parse_c_source(std::string_view text) {
    const auto t = lower(text);
    if (t == "registers" || t == "reg") return CSource::Registers;
    if (t == "shared" || t == "sharedmemory") return CSource::SharedMemory;
    if (t == "global" || t == "globalcached") return CSource::GlobalCached;
    throw ConfigError("unknown C source '" + std::string(text) + "' (expected registers, shared or global)");
}

void check_shape(const ProblemShape& shape) {
    if (shape.m < 1 || shape.m > kMaxSkinnyDim)
        throw ValidationError("M must be in [1, 64], got " + std::to_string(shape.m));
    if (shape.n < 1 || shape.n > kMaxSkinnyDim)
        throw ValidationError("N must be in [1, 64], got " + std::to_string(shape.n));
    if (shape.k < 1) throw ValidationError("K must be >= 1, got " + std::to_string(shape.k));
}

KernelConfig KernelConfig::tsmttsm(int tile_m, int tile_n, Reduction reduction) {
    KernelConfig c;
    c.op = Operation::Tsmttsm;
    c.tile = Tile{tile_m, tile_n};
    c.reduction = reduction;
    return c;
}

KernelConfig KernelConfig::tsmm(int threads_per_row, int unroll, CSource c_source) {
    KernelConfig c;
    c.op = Operation::Tsmm;
    c.threads_per_row = threads_per_row;
    c.unroll = unroll;
    c.c_source = c_source;
    return c;
}

// ---------------------------------------------------------------------------
// Bandwidth table
// ---------------------------------------------------------------------------

std::size_t BandwidthTable::ilp_column(int ilp) const {
    std::size_t col = 0;
    for (std::size_t i = 0; i < ilps.size(); ++i)
        if (ilps[i] <= ilp) col = i;
    return col;
}

double BandwidthTable::lookup(double occupancy, int ilp) const {
    if (occupancies.empty() || ilps.empty()) throw ValidationError("empty bandwidth table");
    const auto col = ilp_column(ilp);
    if (occupancy <= occupancies.front()) return gbs.front()[col];
    if (occupancy >= occupancies.back()) return gbs.back()[col];
    for (std::size_t i = 0; i + 1 < occupancies.size(); ++i) {
        const double lo = occupancies[i];
        const double hi = occupancies[i + 1];
        if (occupancy <= hi) {
            const double t = (occupancy - lo) / (hi - lo);
            return gbs[i][col] + t * (gbs[i + 1][col] - gbs[i][col]);
        }
    }
    return gbs.back()[col];
}

// ---------------------------------------------------------------------------
// Hardware model
// ---------------------------------------------------------------------------

double HardwareModel::peak_gflops() const {
    return static_cast<double>(sms) * fma_per_sm_per_cycle * 2.0 * clock_ghz;
}

HardwareModel HardwareModel::v100() {
    HardwareModel hw;
    auto& t = hw.read_bw;
    t.occupancies = {0.0625, 0.125, 0.25, 0.5, 1.0};
    t.ilps = {1, 4, 16};
    t.gbs = {
        {228, 629, 815},
        {419, 824, 877},
        {681, 872, 884},
        {834, 884, 887},
        {879, 891, 877},
    };
    t.unloaded = {3.0, 10.1, 16.3};
    return hw;
}

namespace {

double parse_number(std::string_view key, std::string_view value) {
    double out = 0;
    const auto* begin = value.data();
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(value) + "'");
    return out;
}

int parse_int(std::string_view key, std::string_view value) {
    const double d = parse_number(key, value);
    if (d != std::floor(d) || std::abs(d) > 1e9)
        throw ConfigError("expected an integer for " + std::string(key) + ": '" + std::string(value) + "'");
    return static_cast<int>(d);
}

}  // namespace

HardwareModel parse_hardware_model(std::string_view text) {
    HardwareModel hw;
    hw.read_bw = {};
    std::map<std::string, std::string> fields;
    // (occupancy percent or -1 for unloaded, ilp) -> GB/s
    std::map<std::pair<double, int>, double> cells;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        auto line = trim(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");

        if (key.starts_with("bw.")) {
            const auto rest = key.substr(3);
            const auto dot = rest.rfind('.');
            if (dot == std::string_view::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": bandwidth key must be bw.<occ_percent>.<ilp>");
            const auto occ_text = rest.substr(0, dot);
            const int ilp = parse_int(key, rest.substr(dot + 1));
            if (ilp < 1) throw ConfigError("line " + std::to_string(line_no) + ": ILP must be >= 1");
            const double occ = occ_text == "unloaded" ? -1.0 : parse_number(key, occ_text);
            if (occ != -1.0 && (occ <= 0.0 || occ > 100.0))
                throw ConfigError("line " + std::to_string(line_no) + ": occupancy percent must be in (0, 100]");
            cells[{occ, ilp}] = parse_number(key, value);
            continue;
        }
        fields[std::string(key)] = std::string(value);
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = fields.find(key);
        if (it == fields.end()) return std::nullopt;
        auto v = it->second;
        fields.erase(it);
        return v;
    };
    auto require = [&](const char* key) {
        auto v = take(key);
        if (!v) throw ConfigError(std::string("missing field ") + key);
        return *v;
    };

    if (auto v = take("name")) hw.name = *v;
    hw.sms = parse_int("sms", require("sms"));
    hw.warp_size = parse_int("warp_size", require("warp_size"));
    hw.fma_per_sm_per_cycle = parse_int("fma_per_sm_per_cycle", require("fma_per_sm_per_cycle"));
    hw.clock_ghz = parse_number("clock_ghz", require("clock_ghz"));
    hw.regfile_per_sm = parse_int("regfile_per_sm", require("regfile_per_sm"));
    hw.max_regs_per_thread = parse_int("max_regs_per_thread", require("max_regs_per_thread"));
    hw.max_warps_per_sm = parse_int("max_warps_per_sm", require("max_warps_per_sm"));
    hw.l1_line_bytes = parse_int("l1_line_bytes", require("l1_line_bytes"));
    hw.sector_bytes = parse_int("sector_bytes", require("sector_bytes"));
    hw.read_bw_peak = parse_number("read_bw_peak", require("read_bw_peak"));
    hw.scale_bw_peak = parse_number("scale_bw_peak", require("scale_bw_peak"));
    if (auto v = take("unloaded_threads")) hw.unloaded_threads = parse_int("unloaded_threads", *v);
    if (auto v = take("l1_issue_cap_gflops")) hw.l1_issue_cap_gflops = parse_number("l1_issue_cap_gflops", *v);
    if (auto v = take("bw_monotone_tolerance")) hw.bw_monotone_tolerance = parse_number("bw_monotone_tolerance", *v);
    if (!fields.empty()) throw ConfigError("unknown field " + fields.begin()->first);

    std::set<double> occ_percents;
    std::set<int> ilps;
    for (const auto& [k, v] : cells) {
        if (k.first > 0) occ_percents.insert(k.first);
        ilps.insert(k.second);
    }
    if (occ_percents.empty()) throw ConfigError("missing field bw.<occ_percent>.<ilp>");

    auto& table = hw.read_bw;
    table.ilps.assign(ilps.begin(), ilps.end());
    for (double p : occ_percents) table.occupancies.push_back(p / 100.0);
    table.gbs.assign(table.occupancies.size(), std::vector<double>(table.ilps.size(), 0.0));
    table.unloaded.assign(table.ilps.size(), std::nullopt);

    for (std::size_t c = 0; c < table.ilps.size(); ++c) {
        const int ilp = table.ilps[c];
        std::vector<std::pair<double, double>> present;  // (fraction, GB/s)
        for (double p : occ_percents)
            if (auto it = cells.find({p, ilp}); it != cells.end()) present.emplace_back(p / 100.0, it->second);
        if (present.empty())
            throw ConfigError("bandwidth column ilp=" + std::to_string(ilp) + " has only an unloaded cell");
        for (std::size_t r = 0; r < table.occupancies.size(); ++r) {
            const double occ = table.occupancies[r];
            if (occ <= present.front().first) {
                table.gbs[r][c] = present.front().second;
            } else if (occ >= present.back().first) {
                table.gbs[r][c] = present.back().second;
            } else {
                for (std::size_t i = 0; i + 1 < present.size(); ++i) {
                    const auto [x0, y0] = present[i];
                    const auto [x1, y1] = present[i + 1];
                    if (occ >= x0 && occ <= x1) {
                        table.gbs[r][c] = y0 + (occ - x0) / (x1 - x0) * (y1 - y0);
                        break;
                    }
                }
            }
        }
        if (auto it = cells.find({-1.0, ilp}); it != cells.end()) table.unloaded[c] = it->second;
    }

    validate_hardware_model(hw);
    return hw;
}

void validate_hardware_model(const HardwareModel& hw) {
    auto positive = [](const char* name, double v) {
        if (!(v > 0)) throw ValidationError(std::string(name) + " must be positive");
    };
    positive("sms", hw.sms);
    positive("warp_size", hw.warp_size);
    positive("fma_per_sm_per_cycle", hw.fma_per_sm_per_cycle);
    positive("clock_ghz", hw.clock_ghz);
    positive("regfile_per_sm", hw.regfile_per_sm);
    positive("max_regs_per_thread", hw.max_regs_per_thread);
    positive("max_warps_per_sm", hw.max_warps_per_sm);
    positive("l1_line_bytes", hw.l1_line_bytes);
    positive("sector_bytes", hw.sector_bytes);
    positive("read_bw_peak", hw.read_bw_peak);
    positive("scale_bw_peak", hw.scale_bw_peak);
    positive("unloaded_threads", hw.unloaded_threads);
    if (hw.l1_issue_cap_gflops) positive("l1_issue_cap_gflops", *hw.l1_issue_cap_gflops);
    if (hw.bw_monotone_tolerance < 0) throw ValidationError("bw_monotone_tolerance must be >= 0");

    const auto& t = hw.read_bw;
    if (t.occupancies.empty() || t.ilps.empty()) throw ValidationError("bandwidth table is empty");
    if (t.gbs.size() != t.occupancies.size()) throw ValidationError("bandwidth table row count mismatch");
    if (t.ilps.front() != 1) throw ValidationError("bandwidth table needs an ILP=1 column");
    for (const auto& row : t.gbs) {
        if (row.size() != t.ilps.size()) throw ValidationError("bandwidth table column count mismatch");
        for (double v : row) positive("bandwidth table cell", v);
    }
    for (std::size_t c = 0; c < t.ilps.size(); ++c) {
        for (std::size_t r = 1; r < t.occupancies.size(); ++r) {
            const double prev = t.gbs[r - 1][c];
            const double cur = t.gbs[r][c];
            if (cur < prev * (1.0 - hw.bw_monotone_tolerance)) {
                std::ostringstream os;
                os << "bandwidth table not monotone in occupancy at ilp=" << t.ilps[c] << ": "
                   << prev << " GB/s at " << t.occupancies[r - 1] * 100 << "% then " << cur << " GB/s at "
                   << t.occupancies[r] * 100 << "%";
                throw ValidationError(os.str());
            }
        }
    }
}

std::string format_hardware_model(const HardwareModel& hw) {
    std::ostringstream os;
    os << "name = " << hw.name << "\n"
       << "sms = " << hw.sms << "\n"
       << "warp_size = " << hw.warp_size << "\n"
       << "fma_per_sm_per_cycle = " << hw.fma_per_sm_per_cycle << "\n"
       << "clock_ghz = " << hw.clock_ghz << "\n"
       << "regfile_per_sm = " << hw.regfile_per_sm << "\n"
       << "max_regs_per_thread = " << hw.max_regs_per_thread << "\n"
       << "max_warps_per_sm = " << hw.max_warps_per_sm << "\n"
       << "l1_line_bytes = " << hw.l1_line_bytes << "\n"
       << "sector_bytes = " << hw.sector_bytes << "\n"
       << "read_bw_peak = " << hw.read_bw_peak << "\n"
       << "scale_bw_peak = " << hw.scale_bw_peak << "\n"
       << "unloaded_threads = " << hw.unloaded_threads << "\n";
    if (hw.l1_issue_cap_gflops) os << "l1_issue_cap_gflops = " << *hw.l1_issue_cap_gflops << "\n";
    os << "bw_monotone_tolerance = " << hw.bw_monotone_tolerance << "\n";
    const auto& t = hw.read_bw;
    for (std::size_t c = 0; c < t.ilps.size(); ++c)
        if (c < t.unloaded.size() && t.unloaded[c]) os << "bw.unloaded." << t.ilps[c] << " = " << *t.unloaded[c] << "\n";
    for (std::size_t r = 0; r < t.occupancies.size(); ++r)
        for (std::size_t c = 0; c < t.ilps.size(); ++c)
            os << "bw." << t.occupancies[r] * 100 << "." << t.ilps[c] << " = " << t.gbs[r][c] << "\n";
    return os.str();
}

HardwareModel load_hardware_model(const std::string& path_or_default) {
    if (path_or_default == "default") return HardwareModel::v100();
    std::ifstream in(path_or_default, std::ios::binary);
    if (!in) throw ConfigError("cannot open hardware model file " + path_or_default);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_hardware_model(buffer.str());
}

// ---------------------------------------------------------------------------
// Validated config helpers
// ---------------------------------------------------------------------------

std::int64_t ValidatedConfig::threads_per_slice() const {
    if (config.op == Operation::Tsmm) return threads_per_row;
    return ceil_div(shape.m, tile.m) * ceil_div(shape.n, tile.n);
}

std::int64_t ValidatedConfig::slice_groups() const { return total_threads() / threads_per_slice(); }

int ValidatedConfig::results_per_thread() const {
    return static_cast<int>(ceil_div(shape.n, threads_per_row));
}

std::vector<std::string> ValidationResult::warnings() const {
    std::vector<std::string> out;
    for (const auto& d : diagnostics)
        if (d.severity == Severity::Warning) out.push_back(d.message);
    return out;
}

std::string ValidationResult::error_text() const {
    std::string out;
    for (const auto& d : diagnostics) {
        if (d.severity != Severity::Error) continue;
        if (!out.empty()) out += "; ";
        out += d.message;
    }
    return out;
}

// ---------------------------------------------------------------------------
// validate_config
// ---------------------------------------------------------------------------

ValidationResult validate_config(const KernelConfig& config, const ProblemShape& shape,
                                 ScalarKind scalar, const HardwareModel& hw) {
    ValidationResult result;
    auto error = [&](std::string msg) { result.diagnostics.push_back({Severity::Error, std::move(msg)}); };
    auto warn = [&](std::string msg) { result.diagnostics.push_back({Severity::Warning, std::move(msg)}); };

    try {
        check_shape(shape);
    } catch (const ValidationError& e) {
        error(e.what());
        return result;
    }

    if (config.block_size <= 0 || config.block_size % hw.warp_size != 0 || config.block_size > 1024)
        error("block size must be a positive multiple of " + std::to_string(hw.warp_size) + " up to 1024, got " +
              std::to_string(config.block_size));
    if (config.grid.explicit_blocks && *config.grid.explicit_blocks <= 0)
        error("explicit grid must have at least one block");

    ValidatedConfig vc;
    vc.config = config;
    vc.shape = shape;
    vc.scalar = scalar;

    if (config.op == Operation::Tsmttsm) {
        if (config.threads_per_row) error("threads_per_row is a TSMM setting");
        if (config.unroll) error("unroll is a TSMM setting");
        if (config.c_source) error("c_source is a TSMM setting");
        if (!config.tile) {
            error("TSMTTSM needs a tile size");
        } else if (config.tile->m < 1 || config.tile->n < 1) {
            error("tile sizes must be >= 1, got " + std::to_string(config.tile->m) + "x" +
                  std::to_string(config.tile->n));
        } else {
            vc.tile = *config.tile;
            if (vc.tile.m > shape.m || vc.tile.n > shape.n) {
                const Tile clamped{static_cast<int>(std::min<std::int64_t>(vc.tile.m, shape.m)),
                                   static_cast<int>(std::min<std::int64_t>(vc.tile.n, shape.n))};
                warn("tile " + std::to_string(vc.tile.m) + "x" + std::to_string(vc.tile.n) + " clamped to " +
                     std::to_string(clamped.m) + "x" + std::to_string(clamped.n));
                vc.tile = clamped;
            }
            vc.config.tile = vc.tile;
        }
        vc.reduction = config.reduction.value_or(Reduction::GlobalAtomic);
        vc.config.reduction = vc.reduction;
        if (vc.reduction == Reduction::None) warn("reduction none: baseline mode, results are partial");
        if (config.conjugate_a && scalar == ScalarKind::RealF64) warn("conjugate_a has no effect on real data");
    } else {
        if (config.tile) error("tile is a TSMTTSM setting");
        if (config.reduction) error("TSMM has no global reduction");
        if (config.conjugate_a) error("conjugate_a is a TSMTTSM setting");
        if (!config.threads_per_row) {
            error("TSMM needs threads_per_row");
        } else {
            const int tpr = *config.threads_per_row;
            if (!is_power_of_two(tpr) || tpr > 2 * shape.n || tpr > std::max(config.block_size, 1))
                error("threads_per_row must be a power of two <= min(2N, block size), got " + std::to_string(tpr));
            vc.threads_per_row = tpr;
        }
        vc.unroll = config.unroll.value_or(1);
        if (vc.unroll < 1 || vc.unroll > 4) error("unroll must be in [1, 4], got " + std::to_string(vc.unroll));
        vc.c_source = config.c_source.value_or(CSource::Registers);
        vc.config.unroll = vc.unroll;
        vc.config.c_source = vc.c_source;
    }

    if (!result.diagnostics.empty() &&
        std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                    [](const Diagnostic& d) { return d.severity == Severity::Error; }))
        return result;

    if (config.op == Operation::Tsmttsm) {
        vc.needs_guards = shape.m % vc.tile.m != 0 || shape.n % vc.tile.n != 0;
        vc.register_estimate = tsmttsm_register_estimate(vc.tile, config.leapfrog, scalar);
        vc.accumulator_registers = tsmttsm_accumulator_registers(vc.tile, scalar);
    } else {
        vc.needs_guards = shape.n % vc.threads_per_row != 0;
        vc.register_estimate = tsmm_register_estimate(vc.results_per_thread(), vc.unroll, config.leapfrog, scalar);
        vc.accumulator_registers = tsmm_accumulator_registers(vc.results_per_thread(), vc.unroll, scalar);
    }
    vc.spill = spills(vc.accumulator_registers, hw);
    vc.occupancy = occupancy(vc.register_estimate, config.block_size, hw);

    if (vc.spill)
        warn("estimated " + std::to_string(vc.register_estimate) + " regs > " +
             std::to_string(hw.max_regs_per_thread) + ": spilling");
    else if (vc.occupancy.register_capped)
        warn("estimated " + std::to_string(vc.register_estimate) + " regs > " +
             std::to_string(hw.max_regs_per_thread) + ": register-capped");

    if (!vc.occupancy.launchable) {
        error("a block of " + std::to_string(config.block_size) + " threads at " +
              std::to_string(vc.occupancy.regs_allocated) + " regs does not fit the register file");
        return result;
    }

    if (config.grid.explicit_blocks) {
        vc.grid_blocks = *config.grid.explicit_blocks;
    } else {
        const int resident_threads = vc.occupancy.warps_per_sm * hw.warp_size;
        vc.grid_blocks = hw.sms * (resident_threads / config.block_size);
    }

    if (vc.total_threads() < vc.threads_per_slice()) {
        error("grid of " + std::to_string(vc.total_threads()) + " threads cannot cover one slice of " +
              std::to_string(vc.threads_per_slice()) + " threads");
        return result;
    }

    result.value = vc;
    return result;
}

ValidatedConfig validate_or_throw(const KernelConfig& config, const ProblemShape& shape, ScalarKind scalar,
                                  const HardwareModel& hw) {
    auto r = validate_config(config, shape, scalar, hw);
    if (!r.ok()) throw ValidationError(r.error_text());
    return *r.value;
}

}  // namespace tskgen
