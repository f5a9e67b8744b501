#pragma once

#include "tskgen/core_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tskgen {

enum class IntensityMode { Exact, Asymptotic };

/// flop/byte with minimal traffic: each of A, B (and C unless asymptotic) moved once.
double arithmetic_intensity(const ProblemShape& shape, ScalarKind scalar, IntensityMode mode);

/// Streaming bandwidth the roofline uses: read-only for TSMTTSM, scale for TSMM.
double roofline_bandwidth(Operation op, const HardwareModel& hw);

/// min(intensity * bandwidth, peak)
double roofline_limit(double intensity, double bandwidth_gbs, const HardwareModel& hw);

// ---------------------------------------------------------------------------
// Registers and occupancy
// ---------------------------------------------------------------------------

/// 2 x (T_M*T_N + (1 + leapfrog) * (T_M + T_N) + 8); complex doubles the
/// accumulator and load terms. The outer 2 is two 32-bit registers per double.
int tsmttsm_register_estimate(Tile tile, bool leapfrog, ScalarKind scalar);

/// 2 x (results * (1 + unroll) + (leapfrog ? 2 : 1) * unroll + 8), complex doubling
/// the value terms. A model choice; nothing in the measurements pins it.
int tsmm_register_estimate(int results_per_thread, int unroll, bool leapfrog, ScalarKind scalar);

/// Registers that hold the live thread-local sums alone.
int tsmttsm_accumulator_registers(Tile tile, ScalarKind scalar);
int tsmm_accumulator_registers(int results_per_thread, int unroll, ScalarKind scalar);

/// The spill test shared by validation, prediction and pruning.
bool spills(int accumulator_registers, const HardwareModel& hw);

int register_estimate(const ValidatedConfig& vc);

/// Registers are allocated per warp in chunks of 8 per thread and whole
/// blocks must fit the register file.
Occupancy occupancy(int regs_per_thread, int block_size, const HardwareModel& hw);

// ---------------------------------------------------------------------------
// Latency
// ---------------------------------------------------------------------------

/// Little's law: cycles = clock * threads * 8 byte / bandwidth.
double loaded_latency(std::int64_t total_threads, double bandwidth_gbs, const HardwareModel& hw);

/// Latency of the memory interface as a function of the bandwidth it serves.
/// Every ILP=1 row of the bandwidth table contributes one point via
/// loaded_latency with that row's thread count.
class LatencyCurve {
public:
    struct Point {
        double bandwidth_gbs;
        double latency_cycles;
    };

    explicit LatencyCurve(const HardwareModel& hw);

    /// Piecewise linear, clamped to the first and last point.
    double at(double bandwidth_gbs) const;
    const std::vector<Point>& points() const { return points_; }

private:
    std::vector<Point> points_;
};

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

enum class Bound { MemoryBound, ComputeBound, LatencyBound };

std::string to_string(Bound b);

struct PerfReport {
    double intensity_flop_per_byte = 0;
    double roofline_gflops = 0;
    int regs_per_thread = 0;
    int warps_per_sm = 0;
    double occupancy_fraction = 0;
    double loaded_latency_cycles = 0;
    double compute_cycles_per_iter = 0;
    double predicted_utilization = 0;
    double predicted_gflops = 0;
    Bound bound = Bound::MemoryBound;

    int ilp = 0;
    double table_bandwidth_gbs = 0;     // read table at (occupancy, ilp)
    double operating_bandwidth_gbs = 0; // predicted_gflops / intensity
    bool spill = false;
    bool register_capped = false;

    /// Column order of to_csv_row().
    static std::string csv_header();
    std::string to_csv_row() const;
    std::string to_text() const;
};

struct PredictOptions {
    IntensityMode intensity_mode = IntensityMode::Asymptotic;
};

/// Roofline plus latency-utilization model.
///
/// Each warp spends C_it = 4 cy per FMA instruction of one loop trip. A quadrant
/// holding W warps keeps its FMA pipe busy for a fraction
///     U = min(1, W * C_it / (C_it + T_l))
/// of the time, where W = warps_per_sm / 4, plus one when leap frogging lets a
/// warp overlap its own latency. T_l is the loaded latency at the bandwidth the
/// kernel draws, and that bandwidth in turn depends on U, so U is solved as a
/// fixed point. Then
///     predicted = min(I * b_s, U * peak [, l1 cap])
/// scaled by max_regs/estimate when the estimate overflows the register file.
PerfReport predict_performance(const ValidatedConfig& vc, const HardwareModel& hw,
                               const PredictOptions& options = {});

// ---------------------------------------------------------------------------
// Store sectors (TSMM write-allocate)
// ---------------------------------------------------------------------------

struct StoreSectorReport {
    std::int64_t touched_sectors = 0;  // (row, store, sector) triples over all K rows
    std::int64_t partial_sectors = 0;
    double partial_sectors_per_row = 0;
    bool write_allocate = false;
};

/// For every row of B, the threads_per_row lanes writing that row issue one
/// store per result slot j; a sector touched by such a store but not fully
/// covered by it forces a write-allocate read. Counted per residue class of
/// the row start modulo the sector size.
StoreSectorReport store_sector_analysis(const ValidatedConfig& vc, const HardwareModel& hw);

}  // namespace tskgen
