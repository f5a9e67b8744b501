#pragma once

#include "tskgen/core_model.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tskgen {

/// Row-major matrix of doubles; complex elements interleave (re, im).
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    ScalarKind scalar = ScalarKind::RealF64;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t rows, std::int64_t cols, ScalarKind scalar);

    std::int64_t elements() const { return rows * cols; }
    int components() const { return scalar == ScalarKind::RealF64 ? 1 : 2; }

    std::complex<double> at(std::int64_t r, std::int64_t c) const;
    void set(std::int64_t r, std::int64_t c, std::complex<double> v);

    static Matrix identity(std::int64_t n, ScalarKind scalar);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix from_rows(const std::vector<std::vector<std::complex<double>>>& rows);

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Counts of semantic events during a simulated launch.
///
///   fma_ops               one per real FMA (4 per complex cell update)
///   elements_loaded_global  A/B (or A/C) elements read from global memory
///   elements_stored_global  plain stores (TSMM writes of B)
///   shared_atomics        shared-memory atomic adds (local reduction)
///   global_atomics        device-wide atomic adds
///   load_sectors_touched  distinct 32-byte sectors per (thread, K iteration)
///   store_sectors_*       (row, store slot, sector) triples of B writes
struct ExecutionCounters {
    std::int64_t fma_ops = 0;
    std::int64_t elements_loaded_global = 0;
    std::int64_t elements_stored_global = 0;
    std::int64_t shared_atomics = 0;
    std::int64_t global_atomics = 0;
    std::int64_t load_sectors_touched = 0;
    std::int64_t store_sectors_touched = 0;
    std::int64_t store_sectors_partial = 0;

    friend bool operator==(const ExecutionCounters&, const ExecutionCounters&) = default;
};

/// Naive triple loop (k outer, then m, then n) with extended-precision sums.
/// TSMTTSM: A is K x M, B is K x N, result M x N.  TSMM: A is K x M, C is M x N,
/// result K x N. conjugate_a conjugates A in the TSMTTSM transpose.
Matrix reference_mmm(Operation op, const Matrix& a, const Matrix& b_or_c, bool conjugate_a = false);

struct SimulationResult {
    Matrix result;
    ExecutionCounters counters;
    bool baseline = false;  // reduction none: result is zero, only counters are meaningful
};

struct SimulateOptions {
    /// Worker threads for independent thread blocks; results are identical for any value.
    int workers = 1;
};

/// Executes every thread's mapped work in (block, thread) order.
SimulationResult simulate(const ValidatedConfig& vc, const Matrix& a, const Matrix& b_or_c,
                          const SimulateOptions& options = {});

struct CompareResult {
    bool pass = false;
    double max_rel_err = 0;
    std::int64_t worst_index = -1;  // element index, row-major
};

/// Relative error per element against max(|ref|, 1e-30).
CompareResult compare(const Matrix& result, const Matrix& reference, double rel_tol);

/// Uniform [-1, 1] from a splitmix64 mix of (seed, component index).
Matrix seeded_fill(std::int64_t rows, std::int64_t cols, ScalarKind scalar, std::uint64_t seed);

/// Mix function behind seeded_fill; exposed so device drivers can match it.
double seeded_value(std::uint64_t seed, std::uint64_t index);

struct Operands {
    Matrix a;       // K x M, seed
    Matrix b_or_c;  // K x N (TSMTTSM) or M x N (TSMM), seed + 1
};

/// The operands every verification path (simulator, CLI, generated driver) uses.
Operands seeded_operands(const ValidatedConfig& vc, std::uint64_t seed);

/// 64-bit FNV-1a over the little-endian payload bytes.
std::uint64_t checksum(const Matrix& m);
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// 24-byte header (rows, cols, scalar code as u64 LE) then the LE payload.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void write_matrix_file(const std::string& path, const Matrix& m);
Matrix read_matrix_file(const std::string& path);

}  // namespace tskgen
