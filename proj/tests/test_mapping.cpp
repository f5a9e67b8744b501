#include "tskgen/mapping.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <array>
#include <set>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();

ValidatedConfig tsmttsm(int m, int n, int tm, int tn, bool tr = false, std::int64_t k = 64, int blocks = 2) {
    return validate_or_throw(
        KernelConfig::tsmttsm(tm, tn).with_transposed(tr).with_block_size(64).with_grid(GridPolicy::explicit_grid(blocks)),
        {m, n, k}, ScalarKind::RealF64, hw);
}

ValidatedConfig tsmm(int m, int n, int tpr, int u = 1, bool tr = false, std::int64_t k = 64) {
    return validate_or_throw(
        KernelConfig::tsmm(tpr, u).with_transposed(tr).with_block_size(64).with_grid(GridPolicy::explicit_grid(2)),
        {m, n, k}, ScalarKind::RealF64, hw);
}

std::set<Cell> cells_of(const ThreadWork& w) { return {w.cells.begin(), w.cells.end()}; }

std::vector<int> columns_of(const ThreadWork& w) {
    std::vector<int> out;
    for (const auto& c : w.columns) out.push_back(c.n);
    return out;
}

}  // namespace

TEST_CASE("TSMTTSM tile 2x3 assignment") {
    const auto w = assign_tsmttsm(tsmttsm(4, 6, 2, 3), 0);
    CHECK(cells_of(w) == std::set<Cell>{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}});
    const auto t = assign_tsmttsm(tsmttsm(4, 6, 2, 3, true), 0);
    CHECK(cells_of(t) == std::set<Cell>{{0, 0}, {0, 2}, {0, 4}, {2, 0}, {2, 2}, {2, 4}});
}

TEST_CASE("threads walk M first") {
    const auto vc = tsmttsm(4, 6, 2, 3);
    CHECK(cells_of(assign_tsmttsm(vc, 1)).count({2, 0}) == 1);
    CHECK(cells_of(assign_tsmttsm(vc, 2)).count({0, 3}) == 1);
}

TEST_CASE("K-only mapping owns everything") {
    const auto vc = tsmttsm(5, 7, 5, 7);
    for (std::int64_t t = 0; t < 10; ++t) CHECK(assign_tsmttsm(vc, t).cells.size() == 35);
    const auto w = assign_tsmttsm(vc, 3);
    CHECK(w.k.start == 3);
    CHECK(w.k.stride == vc.total_threads());
}

TEST_CASE("clipping at the edge") {
    const auto vc = tsmttsm(4, 4, 3, 3);
    // Thread 1 holds m in {3, 4, 5}; only m = 3 survives.
    const auto w = assign_tsmttsm(vc, 1);
    std::set<int> ms;
    for (const auto& c : w.cells) ms.insert(c.m);
    CHECK(ms == std::set<int>{3});
    CHECK(w.clipped.size() == 6);
}

TEST_CASE("threads past the last full slice group are idle") {
    const auto vc = tsmttsm(4, 4, 3, 3, false, 64, 1);  // 64 threads, 4 per slice
    CHECK(assign_tsmttsm(vc, 63).active);
    const auto odd = tsmttsm(3, 3, 1, 1, false, 64, 1);  // 9 per slice, 7 groups
    CHECK(assign_tsmttsm(odd, 62).active);
    CHECK_FALSE(assign_tsmttsm(odd, 63).active);
    CHECK(assign_tsmttsm(odd, 63).cells.empty());
}

TEST_CASE("TSMM column assignment") {
    CHECK(columns_of(assign_tsmm(tsmm(4, 4, 2, 1, true), 0)) == std::vector<int>{0, 2});
    CHECK(columns_of(assign_tsmm(tsmm(4, 8, 1), 0)) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
    const auto vc = tsmm(4, 6, 4, 1, true);
    CHECK(columns_of(assign_tsmm(vc, 3)) == std::vector<int>{3});
    CHECK(columns_of(assign_tsmm(vc, 0)).size() == 2);
    CHECK(columns_of(assign_tsmm(vc, 1)).size() == 2);
    CHECK(guarded_column_slots(vc) == std::vector<int>{1});
}

TEST_CASE("TSMM unrolled k iteration") {
    const auto vc = tsmm(4, 4, 2, 3);
    const auto w = assign_tsmm(vc, 5);  // group 2
    CHECK(w.k.start == 6);
    CHECK(w.k.stride == vc.slice_groups() * 3);
    std::vector<std::int64_t> rows;
    w.k.for_each_row(400, [&](std::int64_t k) { rows.push_back(k); });
    CHECK(rows.size() == static_cast<std::size_t>(w.k.row_count(400)));
    CHECK(std::vector<std::int64_t>(rows.begin(), rows.begin() + 3) == std::vector<std::int64_t>{6, 7, 8});
}

TEST_CASE("coverage for dividing tiles at M = N = 8") {
    for (int tm : {1, 2, 4, 8})
        for (int tn : {1, 2, 4, 8})
            for (bool tr : {false, true}) CHECK_FALSE(coverage_check(tsmttsm(8, 8, tm, tn, tr)).has_value());
}

TEST_CASE("coverage sweep over small shapes and tiles") {
    for (int m = 1; m <= 8; ++m)
        for (int n = 1; n <= 8; ++n)
            for (int tm = 1; tm <= 4; ++tm)
                for (int tn = 1; tn <= 4; ++tn)
                    for (bool tr : {false, true}) {
                        const auto v = coverage_check(tsmttsm(m, n, tm, tn, tr, 37));
                        CHECK_MESSAGE(!v, m << "x" << n << " tile " << tm << "x" << tn << (tr ? " T" : ""));
                    }
}

TEST_CASE("injected off-by-one is caught") {
    auto c = KernelConfig::tsmttsm(2, 2).with_block_size(64).with_grid(GridPolicy::explicit_grid(1));
    c.fault = MappingFault::OffByOne;
    const auto vc = validate_or_throw(c, {4, 4, 64}, ScalarKind::RealF64, hw);
    const auto v = coverage_check(vc);
    REQUIRE(v.has_value());
    CHECK(v->k == 0);
    CHECK(v->owners == 0);
    CHECK(v->message.find("unowned") != std::string::npos);

    auto t = KernelConfig::tsmm(2).with_block_size(64).with_grid(GridPolicy::explicit_grid(1));
    t.fault = MappingFault::OffByOne;
    CHECK(coverage_check(validate_or_throw(t, {4, 4, 64}, ScalarKind::RealF64, hw)).has_value());
}

TEST_CASE("transposition keeps per-thread cell counts") {
    for (auto [m, n, tm, tn] : std::vector<std::array<int, 4>>{{7, 5, 3, 2}, {8, 8, 3, 3}, {6, 4, 4, 3}}) {
        const auto a = tsmttsm(m, n, tm, tn, false);
        const auto b = tsmttsm(m, n, tm, tn, true);
        std::multiset<std::size_t> ca, cb;
        for (std::int64_t t = 0; t < a.threads_per_slice(); ++t) {
            ca.insert(assign_tsmttsm(a, t).cells.size());
            cb.insert(assign_tsmttsm(b, t).cells.size());
        }
        CHECK(ca == cb);
    }
}

TEST_CASE("A-row loads cover every element, once with full-width tiles") {
    const auto vc = tsmttsm(7, 5, 3, 5);
    std::map<int, int> count;
    for (std::int64_t t = 0; t < vc.threads_per_slice(); ++t)
        for (int m : assign_tsmttsm(vc, t).a_loads) ++count[m];
    CHECK(count.size() == 7);
    for (const auto& [m, c] : count) CHECK(c == 1);
}

TEST_CASE("dump mapping") {
    const auto text = dump_mapping(tsmttsm(4, 6, 2, 3));
    CHECK(text.find("tile 2x3") != std::string::npos);
    CHECK(text ==
          "tsmttsm M=4 N=6 tile 2x3 threads_per_slice=4\n"
          "m\\n 0 1 2 3 4 5\n"
          "  0 0 0 0 2 2 2\n"
          "  1 0 0 0 2 2 2\n"
          "  2 1 1 1 3 3 3\n"
          "  3 1 1 1 3 3 3\n");
}
