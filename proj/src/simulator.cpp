#include "tskgen/simulator.hpp"

#include "tskgen/mapping.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

namespace tskgen {

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix::Matrix(std::int64_t rows_, std::int64_t cols_, ScalarKind scalar_)
    : rows(rows_), cols(cols_), scalar(scalar_),
      data(static_cast<std::size_t>(rows_ * cols_ * (scalar_ == ScalarKind::RealF64 ? 1 : 2)), 0.0) {
    if (rows_ < 0 || cols_ < 0) throw ValidationError("matrix dimensions must be nonnegative");
}

std::complex<double> Matrix::at(std::int64_t r, std::int64_t c) const {
    const auto i = static_cast<std::size_t>((r * cols + c) * components());
    if (scalar == ScalarKind::RealF64) return {data[i], 0.0};
    return {data[i], data[i + 1]};
}

void Matrix::set(std::int64_t r, std::int64_t c, std::complex<double> v) {
    const auto i = static_cast<std::size_t>((r * cols + c) * components());
    data[i] = v.real();
    if (scalar == ScalarKind::ComplexF64) data[i + 1] = v.imag();
}

Matrix Matrix::identity(std::int64_t n, ScalarKind scalar) {
    Matrix m(n, n, scalar);
    for (std::int64_t i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<std::int64_t>(rows.size()), rows.empty() ? 0 : static_cast<std::int64_t>(rows[0].size()),
             ScalarKind::RealF64);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<std::int64_t>(rows[r].size()) != m.cols) throw ValidationError("ragged matrix rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c), rows[r][c]);
    }
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<std::complex<double>>>& rows) {
    Matrix m(static_cast<std::int64_t>(rows.size()), rows.empty() ? 0 : static_cast<std::int64_t>(rows[0].size()),
             ScalarKind::ComplexF64);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<std::int64_t>(rows[r].size()) != m.cols) throw ValidationError("ragged matrix rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c), rows[r][c]);
    }
    return m;
}

namespace {

void check_operands(Operation op, const Matrix& a, const Matrix& b_or_c) {
    if (a.scalar != b_or_c.scalar) throw ValidationError("operands have different scalar kinds");
    if (op == Operation::Tsmttsm) {
        if (a.rows != b_or_c.rows)
            throw ValidationError("TSMTTSM needs A and B with the same row count, got " + std::to_string(a.rows) +
                                  " and " + std::to_string(b_or_c.rows));
    } else if (a.cols != b_or_c.rows) {
        throw ValidationError("TSMM needs cols(A) == rows(C), got " + std::to_string(a.cols) + " and " +
                              std::to_string(b_or_c.rows));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

Matrix reference_mmm(Operation op, const Matrix& a, const Matrix& b_or_c, bool conjugate_a) {
    check_operands(op, a, b_or_c);
    const bool cplx = a.scalar == ScalarKind::ComplexF64;
    const int w = cplx ? 2 : 1;
    const double* A = a.data.data();
    const double* X = b_or_c.data.data();

    if (op == Operation::Tsmttsm) {
        const std::int64_t K = a.rows, M = a.cols, N = b_or_c.cols;
        std::vector<long double> acc(static_cast<std::size_t>(M * N * w), 0.0L);
        for (std::int64_t k = 0; k < K; ++k)
            for (std::int64_t m = 0; m < M; ++m) {
                const long double ar = A[(k * M + m) * w];
                const long double ai = cplx ? (conjugate_a ? -1.0L : 1.0L) * A[(k * M + m) * w + 1] : 0.0L;
                long double* row = acc.data() + m * N * w;
                const double* b = X + k * N * w;
                if (!cplx) {
                    for (std::int64_t n = 0; n < N; ++n) row[n] += ar * b[n];
                } else {
                    for (std::int64_t n = 0; n < N; ++n) {
                        const long double br = b[2 * n], bi = b[2 * n + 1];
                        row[2 * n] += ar * br - ai * bi;
                        row[2 * n + 1] += ar * bi + ai * br;
                    }
                }
            }
        Matrix out(M, N, a.scalar);
        for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<double>(acc[i]);
        return out;
    }

    const std::int64_t K = a.rows, M = a.cols, N = b_or_c.cols;
    Matrix out(K, N, a.scalar);
    std::vector<long double> acc(static_cast<std::size_t>(N * w));
    for (std::int64_t k = 0; k < K; ++k) {
        std::fill(acc.begin(), acc.end(), 0.0L);
        for (std::int64_t m = 0; m < M; ++m) {
            const long double ar = A[(k * M + m) * w];
            const long double ai = cplx ? A[(k * M + m) * w + 1] : 0.0L;
            const double* c = X + m * N * w;
            if (!cplx) {
                for (std::int64_t n = 0; n < N; ++n) acc[n] += ar * c[n];
            } else {
                for (std::int64_t n = 0; n < N; ++n) {
                    acc[2 * n] += ar * c[2 * n] - ai * c[2 * n + 1];
                    acc[2 * n + 1] += ar * c[2 * n + 1] + ai * c[2 * n];
                }
            }
        }
        for (std::int64_t i = 0; i < N * w; ++i) out.data[k * N * w + i] = static_cast<double>(acc[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kSectorBytes = 32;

/// The four real FMAs of a complex multiply-add, in emitted order.
inline void madd(double& acc_re, double& acc_im, double ar, double ai, double br, double bi) {
    acc_re += ar * br;
    acc_re -= ai * bi;
    acc_im += ar * bi;
    acc_im += ai * br;
}

/// Distinct sectors covered by elements `idx` of a row starting at byte `offset`.
std::int64_t distinct_sectors(const std::vector<int>& idx, std::int64_t offset, std::int64_t elem) {
    std::set<std::int64_t> s;
    for (int i : idx) {
        const std::int64_t begin = offset + i * elem;
        for (std::int64_t sec = begin / kSectorBytes; sec <= (begin + elem - 1) / kSectorBytes; ++sec) s.insert(sec);
    }
    return static_cast<std::int64_t>(s.size());
}

/// Per-row sector counts repeat with the row start modulo the sector size.
struct SectorPattern {
    std::int64_t period = 1;
    std::vector<std::int64_t> per_residue;

    SectorPattern(const std::vector<int>& idx, std::int64_t row_elems, std::int64_t elem) {
        const std::int64_t row_bytes = row_elems * elem;
        period = kSectorBytes / std::gcd(row_bytes, kSectorBytes);
        for (std::int64_t r = 0; r < period; ++r)
            per_residue.push_back(distinct_sectors(idx, (r * row_bytes) % kSectorBytes, elem));
    }
    std::int64_t at(std::int64_t row) const { return per_residue[static_cast<std::size_t>(row % period)]; }
};

void add_counters(ExecutionCounters& into, const ExecutionCounters& c) {
    into.fma_ops += c.fma_ops;
    into.elements_loaded_global += c.elements_loaded_global;
    into.elements_stored_global += c.elements_stored_global;
    into.shared_atomics += c.shared_atomics;
    into.global_atomics += c.global_atomics;
    into.load_sectors_touched += c.load_sectors_touched;
    into.store_sectors_touched += c.store_sectors_touched;
    into.store_sectors_partial += c.store_sectors_partial;
}

/// Everything a block contributes, applied to global state in block order.
struct BlockOutput {
    ExecutionCounters counters;
    std::vector<std::pair<std::int64_t, std::array<double, 2>>> updates;  // (element, value) in issue order
};

class Simulation {
public:
    Simulation(const ValidatedConfig& vc, const Matrix& a, const Matrix& x)
        : vc_(vc), a_(a), x_(x), cplx_(a.scalar == ScalarKind::ComplexF64), w_(cplx_ ? 2 : 1),
          elem_(bytes_per_element(a.scalar)) {}

    BlockOutput run_block(std::int64_t block) const {
        return vc_.op() == Operation::Tsmttsm ? tsmttsm_block(block) : tsmm_block(block);
    }

private:
    BlockOutput tsmttsm_block(std::int64_t block) const {
        BlockOutput out;
        const std::int64_t K = vc_.shape.k, M = vc_.shape.m, N = vc_.shape.n;
        const bool local = vc_.reduction == Reduction::LocalThenGlobalAtomic;
        const bool conj = vc_.config.conjugate_a;
        std::vector<double> shared;
        if (local) shared.assign(static_cast<std::size_t>(M * N * w_), 0.0);
        std::vector<double> sums;
        const double* A = a_.data.data();
        const double* B = x_.data.data();

        const std::int64_t bs = vc_.config.block_size;
        for (std::int64_t t = 0; t < bs; ++t) {
            const auto work = assign_tsmttsm(vc_, block * bs + t);
            if (!work.active) continue;
            const auto ncells = static_cast<std::int64_t>(work.cells.size());
            sums.assign(static_cast<std::size_t>(ncells * w_), 0.0);
            std::vector<std::int64_t> am, bn;
            for (const auto& c : work.cells) {
                am.push_back(c.m);
                bn.push_back(c.n);
            }
            const SectorPattern a_sec(work.a_loads, M, elem_);
            const SectorPattern b_sec(work.b_loads, N, elem_);
            const auto loads = static_cast<std::int64_t>(work.a_loads.size() + work.b_loads.size());

            std::int64_t rows = 0;
            work.k.for_each_row(K, [&](std::int64_t k) {
                ++rows;
                out.counters.load_sectors_touched += a_sec.at(k) + b_sec.at(k);
                const double* arow = A + k * M * w_;
                const double* brow = B + k * N * w_;
                if (!cplx_) {
                    for (std::int64_t c = 0; c < ncells; ++c) sums[c] += arow[am[c]] * brow[bn[c]];
                } else {
                    for (std::int64_t c = 0; c < ncells; ++c) {
                        const double ai = conj ? -arow[2 * am[c] + 1] : arow[2 * am[c] + 1];
                        madd(sums[2 * c], sums[2 * c + 1], arow[2 * am[c]], ai, brow[2 * bn[c]], brow[2 * bn[c] + 1]);
                    }
                }
            });
            out.counters.fma_ops += rows * ncells * fmas_per_cell(a_.scalar);
            out.counters.elements_loaded_global += rows * loads;

            if (vc_.reduction == Reduction::GlobalAtomic) {
                for (std::int64_t c = 0; c < ncells; ++c)
                    out.updates.push_back({am[c] * N + bn[c], {sums[c * w_], cplx_ ? sums[c * w_ + 1] : 0.0}});
                out.counters.global_atomics += ncells;
            } else if (local) {
                for (std::int64_t c = 0; c < ncells; ++c)
                    for (int p = 0; p < w_; ++p) shared[(am[c] * N + bn[c]) * w_ + p] += sums[c * w_ + p];
                out.counters.shared_atomics += ncells;
            }
        }
        if (local) {
            for (std::int64_t i = 0; i < M * N; ++i)
                out.updates.push_back({i, {shared[i * w_], cplx_ ? shared[i * w_ + 1] : 0.0}});
            out.counters.global_atomics += M * N;
        }
        return out;
    }

    BlockOutput tsmm_block(std::int64_t block) const {
        BlockOutput out;
        const std::int64_t K = vc_.shape.k, M = vc_.shape.m, N = vc_.shape.n;
        const double* A = a_.data.data();
        const double* C = x_.data.data();
        const std::int64_t bs = vc_.config.block_size;
        std::vector<double> acc;

        if (vc_.c_source == CSource::SharedMemory) out.counters.elements_loaded_global += M * N;

        for (std::int64_t t = 0; t < bs; ++t) {
            const auto work = assign_tsmm(vc_, block * bs + t);
            if (!work.active) continue;
            const auto ncols = static_cast<std::int64_t>(work.columns.size());
            if (vc_.c_source == CSource::Registers) out.counters.elements_loaded_global += M * ncols;
            const SectorPattern a_sec(work.a_loads, M, elem_);
            acc.assign(static_cast<std::size_t>(ncols * w_), 0.0);

            std::int64_t rows = 0;
            std::int64_t steps = 0;
            std::int64_t last_base = -1;
            work.k.for_each_row(K, [&](std::int64_t k) {
                ++rows;
                const std::int64_t base = k - (k - work.k.start) % work.k.stride % work.k.rows_per_step;
                if (base != last_base) {
                    ++steps;
                    last_base = base;
                }
                out.counters.load_sectors_touched += a_sec.at(k);
                std::fill(acc.begin(), acc.end(), 0.0);
                const double* arow = A + k * M * w_;
                for (std::int64_t m = 0; m < M; ++m) {
                    const double* crow = C + m * N * w_;
                    if (!cplx_) {
                        const double av = arow[m];
                        for (std::int64_t j = 0; j < ncols; ++j) acc[j] += av * crow[work.columns[j].n];
                    } else {
                        for (std::int64_t j = 0; j < ncols; ++j) {
                            const auto n = work.columns[j].n;
                            madd(acc[2 * j], acc[2 * j + 1], arow[2 * m], arow[2 * m + 1], crow[2 * n], crow[2 * n + 1]);
                        }
                    }
                }
                for (std::int64_t j = 0; j < ncols; ++j)
                    out.updates.push_back({k * N + work.columns[j].n, {acc[j * w_], cplx_ ? acc[j * w_ + 1] : 0.0}});
                for (const auto& col : work.columns)
                    store_masks_[static_cast<std::size_t>(k * rpt() + col.j)] |= std::uint64_t{1} << col.n;
            });
            out.counters.fma_ops += rows * M * ncols * fmas_per_cell(a_.scalar);
            out.counters.elements_loaded_global += rows * M;
            out.counters.elements_stored_global += rows * ncols;
            if (vc_.c_source == CSource::GlobalCached) out.counters.elements_loaded_global += steps * M * ncols;
        }
        return out;
    }

    std::int64_t rpt() const { return vc_.results_per_thread(); }

    const ValidatedConfig& vc_;
    const Matrix& a_;
    const Matrix& x_;
    bool cplx_;
    int w_;
    std::int64_t elem_;

public:
    // (row, store slot) -> written column bits; TSMM blocks run on one worker.
    mutable std::vector<std::uint64_t> store_masks_;
};

void count_store_sectors(const ValidatedConfig& vc, const std::vector<std::uint64_t>& masks,
                         ExecutionCounters& counters) {
    const std::int64_t elem = bytes_per_element(vc.scalar);
    const std::int64_t N = vc.shape.n;
    const std::int64_t rpt = vc.results_per_thread();
    for (std::int64_t k = 0; k < vc.shape.k; ++k) {
        const std::int64_t row_start = k * N * elem;
        for (std::int64_t j = 0; j < rpt; ++j) {
            const std::uint64_t mask = masks[static_cast<std::size_t>(k * rpt + j)];
            if (mask == 0) continue;
            std::set<std::int64_t> sectors;
            for (std::int64_t n = 0; n < N; ++n) {
                if (!(mask >> n & 1)) continue;
                const std::int64_t begin = row_start + n * elem;
                for (std::int64_t s = begin / kSectorBytes; s <= (begin + elem - 1) / kSectorBytes; ++s) sectors.insert(s);
            }
            for (auto s : sectors) {
                std::int64_t covered = 0;
                for (std::int64_t n = 0; n < N; ++n) {
                    if (!(mask >> n & 1)) continue;
                    const std::int64_t begin = row_start + n * elem;
                    const std::int64_t lo = std::max(begin, s * kSectorBytes);
                    const std::int64_t hi = std::min(begin + elem, (s + 1) * kSectorBytes);
                    if (hi > lo) covered += hi - lo;
                }
                ++counters.store_sectors_touched;
                if (covered < kSectorBytes) ++counters.store_sectors_partial;
            }
        }
    }
}

}  // namespace

SimulationResult simulate(const ValidatedConfig& vc, const Matrix& a, const Matrix& b_or_c,
                          const SimulateOptions& options) {
    check_operands(vc.op(), a, b_or_c);
    if (a.scalar != vc.scalar) throw ValidationError("operand scalar kind differs from the config");
    if (a.rows != vc.shape.k || a.cols != vc.shape.m)
        throw ValidationError("A must be K x M = " + std::to_string(vc.shape.k) + " x " + std::to_string(vc.shape.m));
    if (vc.op() == Operation::Tsmttsm && b_or_c.cols != vc.shape.n)
        throw ValidationError("B must be K x N with N = " + std::to_string(vc.shape.n));
    if (vc.op() == Operation::Tsmm && b_or_c.cols != vc.shape.n)
        throw ValidationError("C must be M x N with N = " + std::to_string(vc.shape.n));

    SimulationResult res;
    const bool tsmttsm = vc.op() == Operation::Tsmttsm;
    res.result = tsmttsm ? Matrix(vc.shape.m, vc.shape.n, vc.scalar) : Matrix(vc.shape.k, vc.shape.n, vc.scalar);
    res.baseline = tsmttsm && vc.reduction == Reduction::None;

    Simulation sim(vc, a, b_or_c);
    if (!tsmttsm) sim.store_masks_.assign(static_cast<std::size_t>(vc.shape.k * vc.results_per_thread()), 0);

    const int w = a.components();
    auto apply = [&](const BlockOutput& out) {
        add_counters(res.counters, out.counters);
        for (const auto& [idx, v] : out.updates) {
            auto* dst = res.result.data.data() + idx * w;
            if (tsmttsm) {
                dst[0] += v[0];
                if (w == 2) dst[1] += v[1];
            } else {
                dst[0] = v[0];
                if (w == 2) dst[1] = v[1];
            }
        }
    };

    const std::int64_t blocks = vc.grid_blocks;
    // TSMM blocks share the store mask table, so they stay on one worker.
    const int workers = tsmttsm ? std::max(1, options.workers) : 1;
    if (workers == 1) {
        for (std::int64_t b = 0; b < blocks; ++b) apply(sim.run_block(b));
    } else {
        const std::int64_t wave = static_cast<std::int64_t>(workers) * 4;
        std::vector<BlockOutput> outputs;
        for (std::int64_t b0 = 0; b0 < blocks; b0 += wave) {
            const std::int64_t count = std::min(wave, blocks - b0);
            outputs.assign(static_cast<std::size_t>(count), {});
            std::vector<std::thread> pool;
            for (int t = 0; t < workers; ++t)
                pool.emplace_back([&, t] {
                    for (std::int64_t i = t; i < count; i += workers)
                        outputs[static_cast<std::size_t>(i)] = sim.run_block(b0 + i);
                });
            for (auto& th : pool) th.join();
            for (const auto& out : outputs) apply(out);
        }
    }

    if (!tsmttsm) count_store_sectors(vc, sim.store_masks_, res.counters);
    if (res.baseline) std::fill(res.result.data.begin(), res.result.data.end(), 0.0);
    return res;
}

CompareResult compare(const Matrix& result, const Matrix& reference, double rel_tol) {
    if (result.rows != reference.rows || result.cols != reference.cols || result.scalar != reference.scalar)
        throw ValidationError("compare needs matrices of identical shape and scalar kind");
    CompareResult c;
    c.pass = true;
    for (std::int64_t i = 0; i < reference.elements(); ++i) {
        const auto r = result.at(i / reference.cols, i % reference.cols);
        const auto ref = reference.at(i / reference.cols, i % reference.cols);
        const double err = std::abs(r - ref) / std::max(std::abs(ref), 1e-30);
        if (err > c.max_rel_err || (std::isnan(err) && c.worst_index < 0)) {
            c.max_rel_err = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
            c.worst_index = i;
        }
        if (!(err <= rel_tol)) c.pass = false;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Data
// ---------------------------------------------------------------------------

double seeded_value(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

Matrix seeded_fill(std::int64_t rows, std::int64_t cols, ScalarKind scalar, std::uint64_t seed) {
    Matrix m(rows, cols, scalar);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = seeded_value(seed, i);
    return m;
}

Operands seeded_operands(const ValidatedConfig& vc, std::uint64_t seed) {
    const auto& s = vc.shape;
    const std::int64_t rows = vc.op() == Operation::Tsmttsm ? s.k : s.m;
    return {seeded_fill(s.k, s.m, vc.scalar, seed), seeded_fill(rows, s.n, vc.scalar, seed + 1)};
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

namespace {

void put_u64(unsigned char* out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64(const unsigned char* in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

std::vector<unsigned char> payload_bytes(const Matrix& m) {
    std::vector<unsigned char> bytes(m.data.size() * 8);
    for (std::size_t i = 0; i < m.data.size(); ++i) put_u64(bytes.data() + 8 * i, std::bit_cast<std::uint64_t>(m.data[i]));
    return bytes;
}

}  // namespace

std::uint64_t checksum(const Matrix& m) {
    const auto bytes = payload_bytes(m);
    return fnv1a(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    return out;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    unsigned char header[24];
    put_u64(header, static_cast<std::uint64_t>(m.rows));
    put_u64(header + 8, static_cast<std::uint64_t>(m.cols));
    put_u64(header + 16, m.scalar == ScalarKind::RealF64 ? 0 : 1);
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    const auto bytes = payload_bytes(m);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed to write matrix");
}

Matrix read_matrix(std::istream& in) {
    unsigned char header[24];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw ConfigError("truncated matrix header");
    const auto rows = get_u64(header);
    const auto cols = get_u64(header + 8);
    const auto code = get_u64(header + 16);
    if (code > 1) throw ConfigError("unknown scalar-kind code " + std::to_string(code));
    if (rows > (std::uint64_t{1} << 40) || cols > (std::uint64_t{1} << 20)) throw ConfigError("matrix header too large");
    Matrix m(static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols),
             code == 0 ? ScalarKind::RealF64 : ScalarKind::ComplexF64);
    std::vector<unsigned char> bytes(m.data.size() * 8);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw ConfigError("truncated matrix payload");
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = std::bit_cast<double>(get_u64(bytes.data() + 8 * i));
    return m;
}

void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot create " + path);
    write_matrix(out, m);
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    return read_matrix(in);
}

}  // namespace tskgen
