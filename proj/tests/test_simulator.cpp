#include "tskgen/perf_model.hpp"
#include "tskgen/simulator.hpp"

#include <doctest.h>

#include <complex>
#include <sstream>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();
constexpr auto D = ScalarKind::RealF64;
constexpr auto Z = ScalarKind::ComplexF64;

ValidatedConfig small(KernelConfig c, ProblemShape s, ScalarKind scalar = D, int blocks = 3) {
    return validate_or_throw(c.with_block_size(64).with_grid(GridPolicy::explicit_grid(blocks)), s, scalar, hw);
}

double check_against_oracle(const ValidatedConfig& vc, std::uint64_t seed = 7) {
    const auto ops = seeded_operands(vc, seed);
    const auto sim = simulate(vc, ops.a, ops.b_or_c);
    const auto ref = reference_mmm(vc.op(), ops.a, ops.b_or_c, vc.config.conjugate_a);
    const auto cmp = compare(sim.result, ref, 1e-9);
    CHECK(cmp.pass);
    return cmp.max_rel_err;
}

}  // namespace

TEST_CASE("reference products") {
    const auto a = Matrix::from_rows(std::vector<std::vector<double>>{{1, 0}, {0, 1}, {1, 1}});
    const auto b = Matrix::from_rows(std::vector<std::vector<double>>{{1, 2}, {3, 4}, {5, 6}});
    CHECK(reference_mmm(Operation::Tsmttsm, a, b) ==
          Matrix::from_rows(std::vector<std::vector<double>>{{6, 8}, {8, 10}}));

    const auto x = seeded_fill(9, 3, D, 1);
    CHECK(reference_mmm(Operation::Tsmm, x, Matrix::identity(3, D)) == x);

    using C = std::complex<double>;
    const auto i = Matrix::from_rows(std::vector<std::vector<C>>{{C(0, 1)}});
    CHECK(reference_mmm(Operation::Tsmttsm, i, i).at(0, 0) == C(-1, 0));
    CHECK(reference_mmm(Operation::Tsmttsm, i, i, true).at(0, 0) == C(1, 0));
}

TEST_CASE("seeded fill") {
    CHECK(seeded_fill(3, 2, D, 42).data[0] == 0.48312975754364662);
    CHECK(seeded_fill(5, 5, Z, 3) == seeded_fill(5, 5, Z, 3));
    CHECK(checksum(seeded_fill(5, 5, D, 3)) != checksum(seeded_fill(5, 5, D, 4)));
    for (double v : seeded_fill(50, 7, D, 9).data) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("compare") {
    const auto m = seeded_fill(4, 4, D, 1);
    auto r = compare(m, m, 1e-9);
    CHECK(r.pass);
    CHECK(r.max_rel_err == 0);
    auto p = m;
    p.data[5] *= 1 + 1e-6;
    r = compare(p, m, 1e-9);
    CHECK_FALSE(r.pass);
    CHECK(r.worst_index == 5);
}

TEST_CASE("matrix file round trip") {
    const auto m = seeded_fill(3, 5, Z, 11);
    std::stringstream s;
    write_matrix(s, m);
    CHECK(s.str().size() == 24 + 3 * 5 * 16);
    CHECK(read_matrix(s) == m);
}

TEST_CASE("TSMTTSM simulation matches the oracle") {
    for (auto red : {Reduction::GlobalAtomic, Reduction::LocalThenGlobalAtomic})
        for (bool tr : {false, true})
            for (bool lf : {false, true}) {
                check_against_oracle(small(KernelConfig::tsmttsm(3, 2, red).with_transposed(tr).with_leapfrog(lf), {7, 5, 500}));
                check_against_oracle(small(KernelConfig::tsmttsm(2, 2, red).with_transposed(tr), {4, 3, 300}, Z));
            }
    auto conj = KernelConfig::tsmttsm(2, 3);
    conj.conjugate_a = true;
    check_against_oracle(small(conj, {5, 6, 200}, Z));
}

TEST_CASE("TSMM simulation matches the oracle") {
    for (int tpr : {1, 2, 4, 8})
        for (int u = 1; u <= 4; ++u)
            for (auto cs : {CSource::Registers, CSource::SharedMemory, CSource::GlobalCached})
                for (bool tr : {false, true}) {
                    check_against_oracle(small(KernelConfig::tsmm(tpr, u, cs).with_transposed(tr), {5, 6, 301}));
                }
    check_against_oracle(small(KernelConfig::tsmm(4, 2), {3, 7, 211}, Z));
}

TEST_CASE("FMA count") {
    const auto vc = small(KernelConfig::tsmttsm(3, 3), {7, 5, 123});
    const auto ops = seeded_operands(vc, 1);
    CHECK(simulate(vc, ops.a, ops.b_or_c).counters.fma_ops == 7 * 5 * 123);
    const auto vz = small(KernelConfig::tsmm(2, 3), {4, 6, 77}, Z);
    const auto oz = seeded_operands(vz, 1);
    CHECK(simulate(vz, oz.a, oz.b_or_c).counters.fma_ops == 4 * 4 * 6 * 77);
}

TEST_CASE("loads are bounded below by one row of A and B per k") {
    for (auto t : std::vector<Tile>{{1, 1}, {2, 3}, {7, 5}}) {
        const auto vc = small(KernelConfig::tsmttsm(t.m, t.n), {7, 5, 100});
        const auto ops = seeded_operands(vc, 2);
        CHECK(simulate(vc, ops.a, ops.b_or_c).counters.elements_loaded_global >= 100 * (7 + 5));
    }
}

TEST_CASE("atomic counts by reduction") {
    auto run = [](Reduction r) {
        const auto vc = validate_or_throw(KernelConfig::tsmttsm(4, 4, r).with_grid(GridPolicy::explicit_grid(64)),
                                          {4, 4, 1 << 15}, D, hw);
        const auto ops = seeded_operands(vc, 5);
        return simulate(vc, ops.a, ops.b_or_c);
    };
    const auto g = run(Reduction::GlobalAtomic);
    const auto l = run(Reduction::LocalThenGlobalAtomic);
    CHECK(g.counters.global_atomics == 256 * l.counters.global_atomics);
    CHECK(l.counters.global_atomics == 64 * 16);
    CHECK(l.counters.shared_atomics == 64 * 256 * 16);
    CHECK(compare(g.result, l.result, 1e-9).pass);

    const auto none = run(Reduction::None);
    CHECK(none.baseline);
    CHECK(none.counters.global_atomics == 0);
}

TEST_CASE("store sectors agree with the analysis") {
    for (int n : {1, 3, 4, 5, 8, 12, 32})
        for (int tpr : {1, 2, 4, 8})
            for (int u : {1, 3})
                for (bool tr : {false, true}) {
                    if (tpr > 2 * n) continue;
                    const auto vc = small(KernelConfig::tsmm(tpr, u).with_transposed(tr), {3, n, 97});
                    const auto ops = seeded_operands(vc, 1);
                    const auto sim = simulate(vc, ops.a, ops.b_or_c);
                    const auto model = store_sector_analysis(vc, hw);
                    CHECK(sim.counters.store_sectors_partial == model.partial_sectors);
                    CHECK(sim.counters.store_sectors_touched == model.touched_sectors);
                }
    const auto aligned = small(KernelConfig::tsmm(4).with_transposed(), {4, 32, 100});
    const auto ops = seeded_operands(aligned, 1);
    CHECK(simulate(aligned, ops.a, ops.b_or_c).counters.store_sectors_partial == 0);
}

TEST_CASE("simulation is deterministic across worker counts") {
    const auto vc = small(KernelConfig::tsmttsm(3, 4, Reduction::LocalThenGlobalAtomic), {9, 11, 999}, D, 7);
    const auto ops = seeded_operands(vc, 3);
    const auto a = simulate(vc, ops.a, ops.b_or_c);
    const auto b = simulate(vc, ops.a, ops.b_or_c, {4});
    CHECK(a.result == b.result);
    CHECK(a.counters == b.counters);
    CHECK(simulate(vc, ops.a, ops.b_or_c).result == a.result);
}
