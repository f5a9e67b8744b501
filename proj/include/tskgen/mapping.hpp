#pragma once

#include "tskgen/core_model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tskgen {

struct Cell {
    int m = 0;
    int n = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Position (tm, tn) inside a thread's tile.
struct TileSlot {
    int tm = 0;
    int tn = 0;

    friend bool operator==(const TileSlot&, const TileSlot&) = default;
    friend auto operator<=>(const TileSlot&, const TileSlot&) = default;
};

/// Owned TSMM column of B together with the store slot j that writes it.
struct ColumnSlot {
    int j = 0;
    int n = 0;

    friend bool operator==(const ColumnSlot&, const ColumnSlot&) = default;
};

/// Grid-stride walk over K. Each step covers rows_per_step consecutive rows
/// starting at start + i * stride.
struct KIterator {
    std::int64_t start = 0;
    std::int64_t stride = 1;
    int rows_per_step = 1;

    template <typename Fn>
    void for_each_row(std::int64_t k_rows, Fn&& fn) const {
        for (std::int64_t base = start; base < k_rows; base += stride)
            for (int r = 0; r < rows_per_step && base + r < k_rows; ++r) fn(base + r);
    }
    std::int64_t row_count(std::int64_t k_rows) const;
};

/// What one thread computes. Inactive threads (beyond the last full slice
/// group, or outside the grid) own nothing.
struct ThreadWork {
    std::int64_t thread_id = 0;
    bool active = false;
    std::int64_t local_index = 0;  // position within the slice group

    std::vector<Cell> cells;           // TSMTTSM result cells, tile order (tm major)
    std::vector<TileSlot> clipped;     // TSMTTSM tile slots that fall outside M x N
    std::vector<ColumnSlot> columns;   // TSMM owned columns of B
    std::vector<int> clipped_columns;  // TSMM store slots j beyond N

    std::vector<int> a_loads;  // A-row elements read per K iteration
    std::vector<int> b_loads;  // B-row elements (TSMTTSM) or C columns (TSMM)
    KIterator k;
};

ThreadWork assign_tsmttsm(const ValidatedConfig& vc, std::int64_t thread_id);
ThreadWork assign_tsmm(const ValidatedConfig& vc, std::int64_t thread_id);
ThreadWork assign(const ValidatedConfig& vc, std::int64_t thread_id);

/// Tile slots that are clipped for at least one thread; each needs a guard.
std::vector<TileSlot> guarded_tile_slots(const ValidatedConfig& vc);
/// TSMM store slots j that are clipped for at least one lane.
std::vector<int> guarded_column_slots(const ValidatedConfig& vc);

struct CoverageViolation {
    std::int64_t k = 0;
    int m = -1;  // -1 for TSMM
    int n = 0;
    int owners = 0;
    std::string message;
};

/// Checks that every (k, m, n) [TSMTTSM] or (k, n) [TSMM] is owned by exactly
/// one thread of the grid. Returns the first violation found, scanning k, then
/// m, then n.
std::optional<CoverageViolation> coverage_check(const ValidatedConfig& vc);

/// Text grid of one slice with the owning local thread index in each cell.
/// TSMTTSM draws the M x N slice; TSMM draws the first rows of B.
std::string dump_mapping(const ValidatedConfig& vc);

}  // namespace tskgen
