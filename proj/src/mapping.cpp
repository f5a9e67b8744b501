#include "tskgen/mapping.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace tskgen {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

/// Rows of k in [k0, k1) visited by `it`, in increasing order.
template <typename Fn>
void for_each_row_in(const KIterator& it, std::int64_t k0, std::int64_t k1, Fn&& fn) {
    if (it.start >= k1) return;
    std::int64_t first_step = 0;
    const std::int64_t reach = k0 - it.start - (it.rows_per_step - 1);
    if (reach > 0) first_step = ceil_div(reach, it.stride);
    for (std::int64_t base = it.start + first_step * it.stride; base < k1; base += it.stride)
        for (int r = 0; r < it.rows_per_step; ++r) {
            const std::int64_t row = base + r;
            if (row >= k1) break;
            if (row >= k0) fn(row);
        }
}

}  // namespace

std::int64_t KIterator::row_count(std::int64_t k_rows) const {
    if (start >= k_rows) return 0;
    const std::int64_t steps = ceil_div(k_rows - start, stride);
    const std::int64_t last_base = start + (steps - 1) * stride;
    return (steps - 1) * rows_per_step + std::min<std::int64_t>(rows_per_step, k_rows - last_base);
}

ThreadWork assign_tsmttsm(const ValidatedConfig& vc, std::int64_t thread_id) {
    ThreadWork w;
    w.thread_id = thread_id;
    const std::int64_t tps = vc.threads_per_slice();
    const std::int64_t groups = vc.slice_groups();
    if (thread_id < 0 || thread_id >= groups * tps) return w;

    const int M = static_cast<int>(vc.shape.m);
    const int N = static_cast<int>(vc.shape.n);
    const int TM = vc.tile.m;
    const int TN = vc.tile.n;
    const std::int64_t mt = ceil_div(M, TM);

    w.active = true;
    w.local_index = thread_id % tps;
    const std::int64_t group = thread_id / tps;
    const int midx = static_cast<int>(w.local_index % mt);
    const int nidx = static_cast<int>(w.local_index / mt);

    // Transposed: full tiles interleave with stride (number of full tiles); a
    // trailing partial tile stays contiguous, so per-thread cell counts match
    // the plain mapping.
    const int m_full = M / TM;
    const int n_full = N / TN;
    auto m_of = [&](int tm) {
        if (!vc.config.transposed || midx >= m_full) return midx * TM + tm;
        return tm * m_full + midx;
    };
    auto n_of = [&](int tn) {
        if (!vc.config.transposed || nidx >= n_full) return nidx * TN + tn;
        return tn * n_full + nidx;
    };

    for (int tm = 0; tm < TM; ++tm) {
        const int m = m_of(tm);
        if (m < M) w.a_loads.push_back(m);
        for (int tn = 0; tn < TN; ++tn) {
            const int n = n_of(tn);
            if (m < M && n < N)
                w.cells.push_back({m, n});
            else
                w.clipped.push_back({tm, tn});
        }
    }
    for (int tn = 0; tn < TN; ++tn)
        if (const int n = n_of(tn); n < N) w.b_loads.push_back(n);

    w.k.start = group;
    w.k.stride = groups;
    w.k.rows_per_step = 1;
    if (vc.config.fault == MappingFault::OffByOne && w.local_index == 0) w.k.start += 1;
    return w;
}

ThreadWork assign_tsmm(const ValidatedConfig& vc, std::int64_t thread_id) {
    ThreadWork w;
    w.thread_id = thread_id;
    const std::int64_t tpr = vc.threads_per_row;
    const std::int64_t groups = vc.slice_groups();
    if (thread_id < 0 || thread_id >= groups * tpr) return w;

    const int N = static_cast<int>(vc.shape.n);
    const int rpt = vc.results_per_thread();
    w.active = true;
    w.local_index = thread_id % tpr;
    const int lane = static_cast<int>(w.local_index);
    const std::int64_t group = thread_id / tpr;

    for (int j = 0; j < rpt; ++j) {
        const int col = vc.config.transposed ? lane + j * static_cast<int>(tpr) : lane * rpt + j;
        if (col < N) {
            w.columns.push_back({j, col});
            w.b_loads.push_back(col);
        } else {
            w.clipped_columns.push_back(j);
        }
    }
    for (int m = 0; m < vc.shape.m; ++m) w.a_loads.push_back(m);

    w.k.rows_per_step = vc.unroll;
    w.k.start = group * vc.unroll;
    w.k.stride = groups * vc.unroll;
    if (vc.config.fault == MappingFault::OffByOne && lane == 0) w.k.start += 1;
    return w;
}

ThreadWork assign(const ValidatedConfig& vc, std::int64_t thread_id) {
    return vc.op() == Operation::Tsmttsm ? assign_tsmttsm(vc, thread_id) : assign_tsmm(vc, thread_id);
}

std::vector<TileSlot> guarded_tile_slots(const ValidatedConfig& vc) {
    std::set<TileSlot> slots;
    if (vc.op() == Operation::Tsmttsm)
        for (std::int64_t t = 0; t < vc.threads_per_slice(); ++t)
            for (const auto& s : assign_tsmttsm(vc, t).clipped) slots.insert(s);
    return {slots.begin(), slots.end()};
}

std::vector<int> guarded_column_slots(const ValidatedConfig& vc) {
    std::set<int> slots;
    if (vc.op() == Operation::Tsmm)
        for (std::int64_t t = 0; t < vc.threads_per_row; ++t)
            for (int j : assign_tsmm(vc, t).clipped_columns) slots.insert(j);
    return {slots.begin(), slots.end()};
}

std::optional<CoverageViolation> coverage_check(const ValidatedConfig& vc) {
    const bool tsmttsm = vc.op() == Operation::Tsmttsm;
    const std::int64_t M = vc.shape.m;
    const std::int64_t N = vc.shape.n;
    const std::int64_t K = vc.shape.k;
    const std::int64_t per_row = tsmttsm ? M * N : N;
    const std::int64_t chunk = std::max<std::int64_t>(1, (std::int64_t{1} << 22) / per_row);

    std::vector<ThreadWork> work;
    work.reserve(static_cast<std::size_t>(vc.total_threads()));
    for (std::int64_t t = 0; t < vc.total_threads(); ++t) {
        auto w = assign(vc, t);
        if (w.active) work.push_back(std::move(w));
    }

    std::vector<int> owners;
    for (std::int64_t k0 = 0; k0 < K; k0 += chunk) {
        const std::int64_t k1 = std::min(K, k0 + chunk);
        owners.assign(static_cast<std::size_t>((k1 - k0) * per_row), 0);
        for (const auto& w : work) {
            for_each_row_in(w.k, k0, k1, [&](std::int64_t k) {
                const std::int64_t base = (k - k0) * per_row;
                if (tsmttsm)
                    for (const auto& c : w.cells) ++owners[static_cast<std::size_t>(base + c.m * N + c.n)];
                else
                    for (const auto& c : w.columns) ++owners[static_cast<std::size_t>(base + c.n)];
            });
        }
        for (std::size_t i = 0; i < owners.size(); ++i) {
            if (owners[i] == 1) continue;
            CoverageViolation v;
            const auto idx = static_cast<std::int64_t>(i);
            v.k = k0 + idx / per_row;
            const std::int64_t within = idx % per_row;
            v.m = tsmttsm ? static_cast<int>(within / N) : -1;
            v.n = static_cast<int>(tsmttsm ? within % N : within);
            v.owners = owners[i];
            std::ostringstream os;
            os << (v.owners == 0 ? "unowned" : "duplicated") << " cell k=" << v.k;
            if (tsmttsm) os << " m=" << v.m;
            os << " n=" << v.n << " (" << v.owners << " owners)";
            v.message = os.str();
            return v;
        }
    }
    return std::nullopt;
}

std::string dump_mapping(const ValidatedConfig& vc) {
    std::ostringstream os;
    const std::int64_t M = vc.shape.m;
    const std::int64_t N = vc.shape.n;
    if (vc.op() == Operation::Tsmttsm) {
        std::vector<std::int64_t> owner(static_cast<std::size_t>(M * N), -1);
        for (std::int64_t t = 0; t < vc.threads_per_slice(); ++t)
            for (const auto& c : assign_tsmttsm(vc, t).cells) owner[static_cast<std::size_t>(c.m * N + c.n)] = t;
        const auto width = std::to_string(vc.threads_per_slice() - 1).size() + 1;
        os << "tsmttsm M=" << M << " N=" << N << " tile " << vc.tile.m << "x" << vc.tile.n
           << (vc.config.transposed ? " transposed" : "") << " threads_per_slice=" << vc.threads_per_slice() << "\n";
        os << "m\\n";
        for (std::int64_t n = 0; n < N; ++n) os << std::setw(static_cast<int>(width)) << n;
        os << "\n";
        for (std::int64_t m = 0; m < M; ++m) {
            os << std::setw(3) << m;
            for (std::int64_t n = 0; n < N; ++n) {
                const auto o = owner[static_cast<std::size_t>(m * N + n)];
                os << std::setw(static_cast<int>(width)) << (o < 0 ? std::string(".") : std::to_string(o));
            }
            os << "\n";
        }
        return os.str();
    }

    const std::int64_t rows = std::min<std::int64_t>(vc.shape.k, 8);
    std::vector<std::int64_t> owner(static_cast<std::size_t>(rows * N), -1);
    for (std::int64_t t = 0; t < vc.total_threads(); ++t) {
        const auto w = assign_tsmm(vc, t);
        if (!w.active || w.k.start >= rows) continue;
        for_each_row_in(w.k, 0, rows, [&](std::int64_t k) {
            for (const auto& c : w.columns) owner[static_cast<std::size_t>(k * N + c.n)] = t;
        });
    }
    std::int64_t max_owner = 0;
    for (auto o : owner) max_owner = std::max(max_owner, o);
    const auto width = std::to_string(max_owner).size() + 1;
    os << "tsmm M=" << M << " N=" << N << " threads_per_row=" << vc.threads_per_row << " unroll=" << vc.unroll
       << (vc.config.transposed ? " transposed" : "") << "\n";
    os << "k\\n";
    for (std::int64_t n = 0; n < N; ++n) os << std::setw(static_cast<int>(width)) << n;
    os << "\n";
    for (std::int64_t k = 0; k < rows; ++k) {
        os << std::setw(3) << k;
        for (std::int64_t n = 0; n < N; ++n) {
            const auto o = owner[static_cast<std::size_t>(k * N + n)];
            os << std::setw(static_cast<int>(width)) << (o < 0 ? std::string(".") : std::to_string(o));
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace tskgen
