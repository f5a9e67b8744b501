#include "tskgen/perf_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace tskgen {

namespace {

constexpr int kQuadrantsPerSm = 4;
constexpr double kCyclesPerFmaInstruction = 4.0;
constexpr int kLittleBytesPerThread = 8;

int round_up(int value, int multiple) { return (value + multiple - 1) / multiple * multiple; }

}  // namespace

double arithmetic_intensity(const ProblemShape& shape, ScalarKind scalar, IntensityMode mode) {
    const double m = static_cast<double>(shape.m);
    const double n = static_cast<double>(shape.n);
    const double k = static_cast<double>(shape.k);
    const double bytes = bytes_per_element(scalar);
    const double flops = flop_factor(scalar);
    if (mode == IntensityMode::Asymptotic) return flops * m * n / ((m + n) * bytes);
    return flops * m * n * k / ((m * k + n * k + m * n) * bytes);
}

double roofline_bandwidth(Operation op, const HardwareModel& hw) {
    return op == Operation::Tsmttsm ? hw.read_bw_peak : hw.scale_bw_peak;
}

double roofline_limit(double intensity, double bandwidth_gbs, const HardwareModel& hw) {
    return std::min(intensity * bandwidth_gbs, hw.peak_gflops());
}

int tsmttsm_register_estimate(Tile tile, bool leapfrog, ScalarKind scalar) {
    const int widen = scalar == ScalarKind::ComplexF64 ? 2 : 1;
    const int sums = tile.m * tile.n * widen;
    const int loaded = (leapfrog ? 2 : 1) * (tile.m + tile.n) * widen;
    return 2 * (sums + loaded + 8);
}

int tsmm_register_estimate(int results_per_thread, int unroll, bool leapfrog, ScalarKind scalar) {
    const int widen = scalar == ScalarKind::ComplexF64 ? 2 : 1;
    const int values = results_per_thread * (1 + unroll) * widen;
    const int loaded = (leapfrog ? 2 : 1) * unroll * widen;
    return 2 * (values + loaded + 8);
}

int tsmttsm_accumulator_registers(Tile tile, ScalarKind scalar) {
    return 2 * tile.m * tile.n * (scalar == ScalarKind::ComplexF64 ? 2 : 1);
}

int tsmm_accumulator_registers(int results_per_thread, int unroll, ScalarKind scalar) {
    return 2 * results_per_thread * unroll * (scalar == ScalarKind::ComplexF64 ? 2 : 1);
}

bool spills(int accumulator_registers, const HardwareModel& hw) {
    return accumulator_registers > hw.max_regs_per_thread;
}

int register_estimate(const ValidatedConfig& vc) {
    if (vc.op() == Operation::Tsmttsm) return tsmttsm_register_estimate(vc.tile, vc.config.leapfrog, vc.scalar);
    return tsmm_register_estimate(vc.results_per_thread(), vc.unroll, vc.config.leapfrog, vc.scalar);
}

Occupancy occupancy(int regs_per_thread, int block_size, const HardwareModel& hw) {
    if (regs_per_thread < 1) throw ValidationError("regs_per_thread must be >= 1");
    if (block_size < 1) throw ValidationError("block_size must be >= 1");
    Occupancy o;
    o.register_capped = regs_per_thread > hw.max_regs_per_thread;
    o.regs_allocated = round_up(std::min(regs_per_thread, hw.max_regs_per_thread), 8);
    const int warps_per_block = (block_size + hw.warp_size - 1) / hw.warp_size;
    int blocks = hw.regfile_per_sm / (o.regs_allocated * block_size);
    blocks = std::min(blocks, hw.max_warps_per_sm / warps_per_block);
    o.blocks_per_sm = blocks;
    o.warps_per_sm = blocks * warps_per_block;
    o.launchable = blocks >= 1;
    o.fraction = static_cast<double>(o.warps_per_sm) / hw.max_warps_per_sm;
    return o;
}

double loaded_latency(std::int64_t total_threads, double bandwidth_gbs, const HardwareModel& hw) {
    if (total_threads < 1) throw ValidationError("loaded_latency needs at least one thread");
    if (!(bandwidth_gbs > 0)) throw ValidationError("loaded_latency needs a positive bandwidth");
    return hw.clock_hz() * static_cast<double>(total_threads) * kLittleBytesPerThread / (bandwidth_gbs * 1e9);
}

LatencyCurve::LatencyCurve(const HardwareModel& hw) {
    const auto& t = hw.read_bw;
    const std::size_t ilp1 = t.ilp_column(1);
    if (!t.unloaded.empty() && t.unloaded[ilp1])
        points_.push_back({*t.unloaded[ilp1], loaded_latency(hw.unloaded_threads, *t.unloaded[ilp1], hw)});
    for (std::size_t r = 0; r < t.occupancies.size(); ++r) {
        const auto warps = std::llround(t.occupancies[r] * hw.max_warps_per_sm);
        const std::int64_t threads = std::max<std::int64_t>(1, warps * hw.warp_size * hw.sms);
        points_.push_back({t.gbs[r][ilp1], loaded_latency(threads, t.gbs[r][ilp1], hw)});
    }
    std::stable_sort(points_.begin(), points_.end(),
                     [](const Point& a, const Point& b) { return a.bandwidth_gbs < b.bandwidth_gbs; });
}

double LatencyCurve::at(double bandwidth_gbs) const {
    if (points_.empty()) throw ValidationError("latency curve has no points");
    if (bandwidth_gbs <= points_.front().bandwidth_gbs) return points_.front().latency_cycles;
    if (bandwidth_gbs >= points_.back().bandwidth_gbs) return points_.back().latency_cycles;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        const auto& a = points_[i];
        const auto& b = points_[i + 1];
        if (bandwidth_gbs <= b.bandwidth_gbs) {
            if (b.bandwidth_gbs == a.bandwidth_gbs) return b.latency_cycles;
            const double t = (bandwidth_gbs - a.bandwidth_gbs) / (b.bandwidth_gbs - a.bandwidth_gbs);
            return a.latency_cycles + t * (b.latency_cycles - a.latency_cycles);
        }
    }
    return points_.back().latency_cycles;
}

std::string to_string(Bound b) {
    switch (b) {
        case Bound::MemoryBound: return "memory";
        case Bound::ComputeBound: return "compute";
        case Bound::LatencyBound: return "latency";
    }
    return "?";
}

PerfReport predict_performance(const ValidatedConfig& vc, const HardwareModel& hw, const PredictOptions& options) {
    PerfReport r;
    const auto& shape = vc.shape;
    r.intensity_flop_per_byte = arithmetic_intensity(shape, vc.scalar, options.intensity_mode);
    const double b_s = roofline_bandwidth(vc.op(), hw);
    r.roofline_gflops = roofline_limit(r.intensity_flop_per_byte, b_s, hw);
    r.regs_per_thread = vc.register_estimate;
    r.warps_per_sm = vc.occupancy.warps_per_sm;
    r.occupancy_fraction = vc.occupancy.fraction;
    r.spill = vc.spill;
    r.register_capped = vc.occupancy.register_capped;

    double fma_instructions = 0;
    if (vc.op() == Operation::Tsmttsm) {
        fma_instructions = static_cast<double>(vc.tile.m) * vc.tile.n;
        r.ilp = vc.tile.m + vc.tile.n;
    } else {
        fma_instructions = static_cast<double>(shape.m) * vc.results_per_thread() * vc.unroll;
        r.ilp = static_cast<int>(shape.m) * vc.unroll;
        if (vc.c_source == CSource::GlobalCached) r.ilp += static_cast<int>(shape.m) * vc.results_per_thread();
    }
    fma_instructions *= fmas_per_cell(vc.scalar);
    r.compute_cycles_per_iter = kCyclesPerFmaInstruction * fma_instructions;
    r.table_bandwidth_gbs = hw.read_bw.lookup(r.occupancy_fraction, r.ilp);

    const double peak = hw.peak_gflops();
    const double memory_limit = r.intensity_flop_per_byte * b_s;
    const double compute_limit = hw.l1_issue_cap_gflops ? std::min(peak, *hw.l1_issue_cap_gflops) : peak;
    const double warps = static_cast<double>(r.warps_per_sm) / kQuadrantsPerSm + (vc.config.leapfrog ? 1.0 : 0.0);
    const double c_it = r.compute_cycles_per_iter;
    const LatencyCurve curve(hw);

    auto drawn_bandwidth = [&](double u) {
        return std::min({memory_limit, compute_limit, u * peak}) / r.intensity_flop_per_byte;
    };
    auto utilization_at = [&](double latency) { return std::min(1.0, warps * c_it / (c_it + latency)); };

    // utilization_at(curve.at(drawn_bandwidth(u))) is nonincreasing in u: bisect its fixed point.
    double lo = 0.0;
    double hi = 1.0;
    if (utilization_at(curve.at(drawn_bandwidth(1.0))) >= 1.0) {
        lo = hi = 1.0;
    } else {
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (utilization_at(curve.at(drawn_bandwidth(mid))) > mid)
                lo = mid;
            else
                hi = mid;
        }
    }
    const double u = 0.5 * (lo + hi);
    r.predicted_utilization = u;
    r.loaded_latency_cycles = curve.at(drawn_bandwidth(u));

    const double latency_limit = u * peak;
    r.predicted_gflops = std::min({memory_limit, compute_limit, latency_limit, r.roofline_gflops});
    if (memory_limit <= compute_limit && memory_limit <= latency_limit)
        r.bound = Bound::MemoryBound;
    else if (compute_limit <= latency_limit)
        r.bound = Bound::ComputeBound;
    else
        r.bound = Bound::LatencyBound;
    r.operating_bandwidth_gbs = r.predicted_gflops / r.intensity_flop_per_byte;
    return r;
}

std::string PerfReport::csv_header() {
    return "intensity,roofline_gflops,regs,warps_per_sm,occupancy,loaded_latency_cy,compute_cy_per_iter,"
           "utilization,predicted_gflops,bound,ilp,table_bw_gbs,operating_bw_gbs,spill,register_capped";
}

std::string PerfReport::to_csv_row() const {
    std::ostringstream os;
    os << std::setprecision(10) << intensity_flop_per_byte << ',' << roofline_gflops << ',' << regs_per_thread << ','
       << warps_per_sm << ',' << occupancy_fraction << ',' << loaded_latency_cycles << ','
       << compute_cycles_per_iter << ',' << predicted_utilization << ',' << predicted_gflops << ','
       << to_string(bound) << ',' << ilp << ',' << table_bandwidth_gbs << ',' << operating_bandwidth_gbs << ','
       << (spill ? 1 : 0) << ',' << (register_capped ? 1 : 0);
    return os.str();
}

std::string PerfReport::to_text() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << "arithmetic intensity   " << intensity_flop_per_byte << " flop/byte\n"
       << "roofline limit         " << std::setprecision(1) << roofline_gflops << " GFlop/s\n"
       << "registers per thread   " << regs_per_thread << (spill ? " (spilling)" : register_capped ? " (capped)" : "")
       << "\n"
       << "warps per SM           " << warps_per_sm << " (" << occupancy_fraction * 100 << "% occupancy)\n"
       << "loaded latency         " << loaded_latency_cycles << " cy\n"
       << "compute per iteration  " << compute_cycles_per_iter << " cy\n"
       << "utilization            " << std::setprecision(3) << predicted_utilization << "\n"
       << "predicted              " << std::setprecision(1) << predicted_gflops << " GFlop/s (" << to_string(bound)
       << " bound)\n";
    return os.str();
}

StoreSectorReport store_sector_analysis(const ValidatedConfig& vc, const HardwareModel& hw) {
    if (vc.op() != Operation::Tsmm) throw ValidationError("store sector analysis applies to TSMM only");
    const std::int64_t elem = bytes_per_element(vc.scalar);
    const std::int64_t n = vc.shape.n;
    const std::int64_t row_bytes = n * elem;
    const std::int64_t sector = hw.sector_bytes;
    const std::int64_t period = sector / std::gcd(row_bytes, sector);
    const int tpr = vc.threads_per_row;
    const int rpt = vc.results_per_thread();

    // Columns each store slot j writes across the tpr lanes of a row.
    std::vector<std::vector<std::int64_t>> slots(rpt);
    for (int j = 0; j < rpt; ++j)
        for (int lane = 0; lane < tpr; ++lane) {
            const std::int64_t col = vc.config.transposed ? lane + static_cast<std::int64_t>(j) * tpr
                                                          : static_cast<std::int64_t>(lane) * rpt + j;
            if (col < n) slots[j].push_back(col);
        }

    StoreSectorReport report;
    for (std::int64_t residue = 0; residue < period; ++residue) {
        if (residue >= vc.shape.k) break;
        const std::int64_t rows = (vc.shape.k - residue + period - 1) / period;
        const std::int64_t offset = (residue * row_bytes) % sector;
        std::int64_t touched = 0;
        std::int64_t partial = 0;
        for (const auto& cols : slots) {
            std::set<std::int64_t> sectors;
            for (auto c : cols) {
                const std::int64_t begin = offset + c * elem;
                for (std::int64_t s = begin / sector; s <= (begin + elem - 1) / sector; ++s) sectors.insert(s);
            }
            for (auto s : sectors) {
                std::int64_t covered = 0;
                for (auto c : cols) {
                    const std::int64_t begin = offset + c * elem;
                    const std::int64_t lo = std::max(begin, s * sector);
                    const std::int64_t hi = std::min(begin + elem, (s + 1) * sector);
                    if (hi > lo) covered += hi - lo;
                }
                ++touched;
                if (covered < sector) ++partial;
            }
        }
        report.touched_sectors += rows * touched;
        report.partial_sectors += rows * partial;
    }
    report.partial_sectors_per_row = static_cast<double>(report.partial_sectors) / static_cast<double>(vc.shape.k);
    report.write_allocate = report.partial_sectors > 0;
    return report;
}

}  // namespace tskgen
