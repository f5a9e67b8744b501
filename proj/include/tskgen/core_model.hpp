#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tskgen {

/// Raised for malformed input files and unusable command-line values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a problem shape, kernel config or hardware model breaks an invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalars and shapes
// ---------------------------------------------------------------------------

enum class ScalarKind { RealF64, ComplexF64 };

/// Flops per multiply-add cell: 2 for real, 8 for complex (4 mul + 4 add).
constexpr int flop_factor(ScalarKind s) { return s == ScalarKind::RealF64 ? 2 : 8; }
constexpr int bytes_per_element(ScalarKind s) { return s == ScalarKind::RealF64 ? 8 : 16; }
/// Real FMA instructions needed for one multiply-add cell.
constexpr int fmas_per_cell(ScalarKind s) { return s == ScalarKind::RealF64 ? 1 : 4; }

char scalar_code(ScalarKind s);  // 'd' or 'z'
ScalarKind parse_scalar(std::string_view text);

/// A is K x M, B is K x N (TSMTTSM) and C is M x N.
struct ProblemShape {
    std::int64_t m = 1;
    std::int64_t n = 1;
    std::int64_t k = 1;

    friend bool operator==(const ProblemShape&, const ProblemShape&) = default;
};

inline constexpr std::int64_t kMaxSkinnyDim = 64;

/// Throws ValidationError unless 1 <= M,N <= 64 and K >= 1.
void check_shape(const ProblemShape& shape);

// ---------------------------------------------------------------------------
// Kernel configuration
// ---------------------------------------------------------------------------

enum class Operation { Tsmttsm, Tsmm };
enum class Reduction { None, GlobalAtomic, LocalThenGlobalAtomic };
enum class CSource { Registers, SharedMemory, GlobalCached };

/// Test hook that corrupts the thread mapping; never part of a config's identity.
enum class MappingFault { None, OffByOne };

std::string to_string(Operation op);
std::string to_string(Reduction r);
std::string to_string(CSource c);
Operation parse_operation(std::string_view text);
Reduction parse_reduction(std::string_view text);
CSource parse_c_source(std::string_view text);

/// Result cells one TSMTTSM thread accumulates per K iteration.
struct Tile {
    int m = 1;
    int n = 1;

    friend bool operator==(const Tile&, const Tile&) = default;
};

struct GridPolicy {
    /// Empty means "fill the device": one full wave of resident blocks.
    std::optional<int> explicit_blocks;

    static GridPolicy fill_device() { return {}; }
    static GridPolicy explicit_grid(int blocks) { return {blocks}; }
    bool fills_device() const { return !explicit_blocks.has_value(); }

    friend bool operator==(const GridPolicy&, const GridPolicy&) = default;
};

/// One kernel variant. Op-specific fields are optional so that setting a
/// TSMM knob on a TSMTTSM config (or vice versa) can be rejected.
///
/// K-only mapping is the tile (M, N); K+N mapping is the tile (M, 1).
struct KernelConfig {
    Operation op = Operation::Tsmttsm;

    // TSMTTSM
    std::optional<Tile> tile;
    std::optional<Reduction> reduction;
    bool conjugate_a = false;

    // TSMM
    std::optional<int> threads_per_row;
    std::optional<int> unroll;
    std::optional<CSource> c_source;

    // shared
    bool transposed = false;
    bool leapfrog = false;
    int block_size = 256;
    GridPolicy grid;

    MappingFault fault = MappingFault::None;

    static KernelConfig tsmttsm(int tile_m, int tile_n,
                                Reduction reduction = Reduction::GlobalAtomic);
    static KernelConfig tsmm(int threads_per_row, int unroll = 1,
                             CSource c_source = CSource::Registers);

    KernelConfig& with_leapfrog(bool on = true) { leapfrog = on; return *this; }
    KernelConfig& with_transposed(bool on = true) { transposed = on; return *this; }
    KernelConfig& with_block_size(int threads) { block_size = threads; return *this; }
    KernelConfig& with_grid(GridPolicy policy) { grid = policy; return *this; }

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

// ---------------------------------------------------------------------------
// Hardware model
// ---------------------------------------------------------------------------

/// Measured read bandwidth (GB/s) by occupancy fraction and load ILP.
struct BandwidthTable {
    std::vector<double> occupancies;             // ascending fractions in (0, 1]
    std::vector<int> ilps;                       // ascending
    std::vector<std::vector<double>> gbs;        // [occupancy][ilp]
    std::vector<std::optional<double>> unloaded; // per ilp; single block of unloaded_threads

    /// Linear in occupancy (clamped at the ends); ILP floored to a table column.
    double lookup(double occupancy, int ilp) const;
    /// Index of the column with the largest ILP <= ilp (column 0 if ilp is smaller than all).
    std::size_t ilp_column(int ilp) const;
};

struct HardwareModel {
    std::string name = "V100-PCIe-16GB";
    int sms = 80;
    int warp_size = 32;
    int fma_per_sm_per_cycle = 32;
    double clock_ghz = 1.38;
    int regfile_per_sm = 65536;
    int max_regs_per_thread = 256;
    int max_warps_per_sm = 64;
    int l1_line_bytes = 128;
    int sector_bytes = 32;
    BandwidthTable read_bw;
    double read_bw_peak = 880.0;
    double scale_bw_peak = 820.0;
    int unloaded_threads = 128;
    std::optional<double> l1_issue_cap_gflops;
    double bw_monotone_tolerance = 0.02;

    double peak_gflops() const;
    double clock_hz() const { return clock_ghz * 1e9; }

    /// The V100 numbers with Table 1 bandwidths.
    static HardwareModel v100();
};

/// "default" returns HardwareModel::v100(); anything else is a file path.
HardwareModel load_hardware_model(const std::string& path_or_default);
HardwareModel parse_hardware_model(std::string_view text);
std::string format_hardware_model(const HardwareModel& hw);
void validate_hardware_model(const HardwareModel& hw);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Occupancy {
    int regs_allocated = 0;  // per thread, after capping and allocation rounding
    int blocks_per_sm = 0;
    int warps_per_sm = 0;
    double fraction = 0.0;
    bool launchable = false;
    bool register_capped = false;  // estimate exceeded max_regs_per_thread
};

/// A config that passed validation, with every optional resolved.
struct ValidatedConfig {
    KernelConfig config;
    ProblemShape shape;
    ScalarKind scalar = ScalarKind::RealF64;

    Tile tile;               // TSMTTSM, clamped to (M, N)
    Reduction reduction = Reduction::GlobalAtomic;
    int threads_per_row = 1; // TSMM
    int unroll = 1;
    CSource c_source = CSource::Registers;

    bool needs_guards = false;
    int register_estimate = 0;
    int accumulator_registers = 0;
    bool spill = false;
    Occupancy occupancy;
    int grid_blocks = 0;

    Operation op() const { return config.op; }
    std::int64_t total_threads() const {
        return static_cast<std::int64_t>(grid_blocks) * config.block_size;
    }
    /// ceil(M/T_M) * ceil(N/T_N) for TSMTTSM, threads_per_row for TSMM.
    std::int64_t threads_per_slice() const;
    /// Number of independent K-row streams (grid-stride groups).
    std::int64_t slice_groups() const;
    /// ceil(N / threads_per_row).
    int results_per_thread() const;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity;
    std::string message;

    friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct ValidationResult {
    std::optional<ValidatedConfig> value;
    std::vector<Diagnostic> diagnostics;

    bool ok() const { return value.has_value(); }
    std::vector<std::string> warnings() const;
    std::string error_text() const;
};

ValidationResult validate_config(const KernelConfig& config, const ProblemShape& shape,
                                 ScalarKind scalar, const HardwareModel& hw);

/// validate_config that throws ValidationError on failure.
ValidatedConfig validate_or_throw(const KernelConfig& config, const ProblemShape& shape,
                                  ScalarKind scalar, const HardwareModel& hw);

}  // namespace tskgen
