// Acceptance suite: one line per criterion, "criterion N: PASS|FAIL  <summary>".

#include "tskgen/autotuner.hpp"
#include "tskgen/codegen.hpp"
#include "tskgen/mapping.hpp"
#include "tskgen/perf_model.hpp"
#include "tskgen/simulator.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();
constexpr auto D = ScalarKind::RealF64;
constexpr auto Z = ScalarKind::ComplexF64;

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        if (pass) detail = what;
        pass = false;
    }
};

bool rel_close(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::abs(b); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Verdict criterion1() {
    Verdict v;
    v.require(arithmetic_intensity({64, 64, 1}, D, IntensityMode::Asymptotic) == 8.0, "I(64,64,D) != 8");
    v.require(arithmetic_intensity({1, 1, 1}, D, IntensityMode::Asymptotic) == 0.125, "I(1,1,D) != 0.125");
    for (int m = 1; m <= 64; ++m)
        for (int n = 1; n <= 64; ++n)
            for (auto mode : {IntensityMode::Asymptotic, IntensityMode::Exact}) {
                const ProblemShape s{m, n, 1 << 20};
                v.require(rel_close(arithmetic_intensity(s, Z, mode), 2 * arithmetic_intensity(s, D, mode)),
                          "I(Z) != 2 I(D) at M=" + std::to_string(m) + " N=" + std::to_string(n));
            }
    if (v.pass) v.detail = "I(64,64)=8, I(1,1)=0.125, I_Z=2 I_D for all M,N in [1,64]";
    return v;
}

Verdict criterion2() {
    Verdict v;
    const double a = loaded_latency(128, 3.0, hw);
    const double b = loaded_latency(40960, 681, hw);
    v.require(a >= 460 && a <= 480, "latency(128, 3.0) = " + fmt("%.1f", a));
    v.require(b >= 650 && b <= 678, "latency(40960, 681) = " + fmt("%.1f", b));
    if (v.pass) v.detail = fmt("%.1f cy", a) + " and " + fmt("%.1f cy", b);
    return v;
}

Verdict criterion3() {
    Verdict v;
    const auto a = occupancy(176, 256, hw);
    const auto b = occupancy(128, 256, hw);
    v.require(a.warps_per_sm == 8 && a.fraction == 0.125, "176 regs -> " + std::to_string(a.warps_per_sm) + " warps");
    v.require(b.warps_per_sm == 16 && b.fraction == 0.25, "128 regs -> " + std::to_string(b.warps_per_sm) + " warps");
    if (v.pass) v.detail = "176 regs: 8 warps (12.5%), 128 regs: 16 warps (25%)";
    return v;
}

Verdict criterion4() {
    Verdict v;
    for (int s = 1; s <= 64; ++s) {
        const auto vc = validate_or_throw(KernelConfig::tsmttsm(s, s), {s, s, 1 << 16}, D, hw);
        v.require(vc.spill == (s >= 12), "K-only M=N=" + std::to_string(s) + (vc.spill ? " spills" : " does not spill"));
    }
    if (v.pass) v.detail = "K-only mapping spills exactly for M=N >= 12";
    return v;
}

Verdict criterion5() {
    Verdict v;
    const auto vc = validate_or_throw(KernelConfig::tsmttsm(11, 8), {64, 64, 1 << 20}, D, hw);
    const auto r = predict_performance(vc, hw);
    v.require(r.predicted_utilization >= 0.62 && r.predicted_utilization <= 0.72,
              "utilization " + fmt("%.3f", r.predicted_utilization));
    v.detail = "utilization " + fmt("%.3f", r.predicted_utilization) + ", " + fmt("%.0f GFlop/s", r.predicted_gflops);
    return v;
}

/// Criterion 6 configurations; criteria 7 and 9 reuse them.
struct Case {
    KernelConfig config;
    ProblemShape shape;
    ScalarKind scalar;
};

std::vector<Case> exhaustive_cases() {
    std::vector<Case> out;
    const std::int64_t K = 4096;
    for (int m = 1; m <= 8; ++m)
        for (int n = 1; n <= 8; ++n) {
            for (int tm = 1; tm <= m; ++tm)
                for (int tn = 1; tn <= n; ++tn)
                    for (bool tr : {false, true})
                        for (auto red : {Reduction::GlobalAtomic, Reduction::LocalThenGlobalAtomic})
                            for (bool lf : {false, true})
                                out.push_back({KernelConfig::tsmttsm(tm, tn, red)
                                                   .with_transposed(tr)
                                                   .with_leapfrog(lf)
                                                   .with_block_size(64)
                                                   .with_grid(GridPolicy::explicit_grid(3)),
                                               {m, n, K}, D});
            for (int tpr : {1, 2, 4, 8, 16, 32}) {
                if (tpr > 2 * n) continue;
                for (int u = 1; u <= 4; ++u)
                    for (auto cs : {CSource::Registers, CSource::SharedMemory, CSource::GlobalCached})
                        for (bool tr : {false, true})
                            out.push_back({KernelConfig::tsmm(tpr, u, cs)
                                               .with_transposed(tr)
                                               .with_block_size(64)
                                               .with_grid(GridPolicy::explicit_grid(3)),
                                           {m, n, K}, D});
            }
        }
    return out;
}

std::vector<Case> random_cases(int count) {
    std::mt19937_64 rng(20200101);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    std::vector<Case> out;
    while (static_cast<int>(out.size()) < count) {
        const int m = pick(1, 64), n = pick(1, 64);
        const auto scalar = pick(0, 3) == 0 ? Z : D;
        const int block = 64 << pick(0, 2);
        const int blocks = pick(1, 6);
        KernelConfig c;
        if (pick(0, 1) == 0) {
            c = KernelConfig::tsmttsm(pick(1, m), pick(1, n),
                                      pick(0, 1) ? Reduction::GlobalAtomic : Reduction::LocalThenGlobalAtomic);
        } else {
            int tpr = 1 << pick(0, 5);
            while (tpr > 2 * n) tpr /= 2;
            c = KernelConfig::tsmm(tpr, pick(1, 4), static_cast<CSource>(pick(0, 2)));
        }
        c.with_transposed(pick(0, 1)).with_leapfrog(pick(0, 1)).with_block_size(block).with_grid(GridPolicy::explicit_grid(blocks));
        const ProblemShape shape{m, n, 1 << 16};
        if (!validate_config(c, shape, scalar, hw).ok()) continue;  // grid smaller than one slice
        out.push_back({c, shape, scalar});
    }
    return out;
}

struct OracleStats {
    int run = 0;
    int failed = 0;
    double worst = 0;
    double worst_componentwise = 0;  // over failing elements only
    std::string first_failure;
};

/// Largest |sim - ref| / sum|a_i b_i| over elements whose relative error exceeds tol.
/// Values near unit roundoff mean the excess is cancellation, not a wrong mapping.
double componentwise_excess(Operation op, const Matrix& a, const Matrix& bc, const Matrix& sim, const Matrix& ref,
                            double tol) {
    double worst = 0;
    for (std::int64_t r = 0; r < ref.rows; ++r)
        for (std::int64_t c = 0; c < ref.cols; ++c) {
            const auto want = ref.at(r, c);
            const double err = std::abs(sim.at(r, c) - want);
            if (err <= tol * std::max(std::abs(want), 1e-30)) continue;
            double magnitude = 0;
            if (op == Operation::Tsmttsm)
                for (std::int64_t k = 0; k < a.rows; ++k) magnitude += std::abs(a.at(k, r)) * std::abs(bc.at(k, c));
            else
                for (std::int64_t m = 0; m < a.cols; ++m) magnitude += std::abs(a.at(r, m)) * std::abs(bc.at(m, c));
            worst = std::max(worst, err / magnitude);
        }
    return worst;
}

void oracle(const Case& c, OracleStats& stats, std::uint64_t seed) {
    const auto vc = validate_or_throw(c.config, c.shape, c.scalar, hw);
    const auto ops = seeded_operands(vc, seed);
    const auto sim = simulate(vc, ops.a, ops.b_or_c);
    const auto ref = reference_mmm(vc.op(), ops.a, ops.b_or_c);
    const auto cmp = compare(sim.result, ref, 1e-9);
    ++stats.run;
    stats.worst = std::max(stats.worst, cmp.max_rel_err);
    if (!cmp.pass) {
        stats.worst_componentwise = std::max(
            stats.worst_componentwise, componentwise_excess(vc.op(), ops.a, ops.b_or_c, sim.result, ref, 1e-9));
        if (stats.failed++ == 0) stats.first_failure = kernel_name(vc) + " err " + fmt("%.3e", cmp.max_rel_err);
    }
}

Verdict criterion6(const std::vector<Case>& exhaustive, const std::vector<Case>& sampled) {
    Verdict v;
    OracleStats ex, rs;
    for (const auto& c : exhaustive) oracle(c, ex, 1);
    for (std::size_t i = 0; i < sampled.size(); ++i) oracle(sampled[i], rs, 100 + i);
    v.require(ex.failed == 0, std::to_string(ex.failed) + " exhaustive failures, first " + ex.first_failure);
    v.require(rs.failed == 0, std::to_string(rs.failed) + " sampled failures, first " + rs.first_failure);
    std::ostringstream os;
    os << ex.run << " exhaustive (K=4096) + " << rs.run << " sampled (K=2^16) configs, max rel err "
       << fmt("%.2e", std::max(ex.worst, rs.worst));
    if (!v.pass) {
        const double cw = std::max(ex.worst_componentwise, rs.worst_componentwise);
        os << "; failing elements have |err|/sum|a*b| <= " << fmt("%.1e", cw)
           << (cw < 64 * 0x1.0p-53 ? " (cancellation in a correct sum)" : " (beyond rounding: mapping error)");
    }
    if (v.pass) v.detail = os.str();
    else v.detail += "; " + os.str();
    return v;
}

Verdict criterion7(const std::vector<Case>& exhaustive, const std::vector<Case>& sampled) {
    Verdict v;
    int checked = 0;
    for (const auto* set : {&exhaustive, &sampled})
        for (const auto& c : *set) {
            const auto vc = validate_or_throw(c.config, c.shape, c.scalar, hw);
            const auto violation = coverage_check(vc);
            ++checked;
            v.require(!violation, kernel_name(vc) + ": " + (violation ? violation->message : ""));
        }
    int caught = 0, injected = 0;
    for (const auto& base : {KernelConfig::tsmttsm(2, 3), KernelConfig::tsmttsm(3, 3).with_transposed(),
                             KernelConfig::tsmm(4, 2).with_transposed()}) {
        auto c = base;
        c.with_block_size(64).with_grid(GridPolicy::explicit_grid(2)).fault = MappingFault::OffByOne;
        ++injected;
        caught += coverage_check(validate_or_throw(c, {6, 6, 512}, D, hw)).has_value();
    }
    v.require(caught == injected, "off-by-one went undetected");
    if (v.pass)
        v.detail = std::to_string(checked) + " configs partition exactly; " + std::to_string(caught) + "/" +
                   std::to_string(injected) + " injected faults caught";
    return v;
}

Verdict criterion8() {
    Verdict v;
    auto run = [](Reduction r) {
        const auto vc = validate_or_throw(
            KernelConfig::tsmttsm(4, 4, r).with_block_size(256).with_grid(GridPolicy::explicit_grid(64)), {4, 4, 1 << 16},
            D, hw);
        const auto ops = seeded_operands(vc, 8);
        return simulate(vc, ops.a, ops.b_or_c);
    };
    const auto g = run(Reduction::GlobalAtomic);
    const auto l = run(Reduction::LocalThenGlobalAtomic);
    v.require(l.counters.global_atomics > 0 && g.counters.global_atomics == 256 * l.counters.global_atomics,
              "atomics " + std::to_string(g.counters.global_atomics) + " vs " + std::to_string(l.counters.global_atomics));
    const auto cmp = compare(l.result, g.result, 1e-9);
    v.require(cmp.pass, "results differ by " + fmt("%.3e", cmp.max_rel_err));
    if (v.pass)
        v.detail = "global atomics " + std::to_string(g.counters.global_atomics) + " : " +
                   std::to_string(l.counters.global_atomics) + " = 256:1, results agree to " + fmt("%.1e", cmp.max_rel_err);
    return v;
}

Verdict criterion9(const std::vector<Case>& exhaustive) {
    Verdict v;
    int checked = 0, aligned = 0;
    for (const auto& c : exhaustive) {
        if (c.config.op != Operation::Tsmm) continue;
        const auto vc = validate_or_throw(c.config, c.shape, c.scalar, hw);
        const auto ops = seeded_operands(vc, 1);
        const auto sim = simulate(vc, ops.a, ops.b_or_c);
        const auto model = store_sector_analysis(vc, hw);
        ++checked;
        v.require(sim.counters.store_sectors_partial == model.partial_sectors,
                  kernel_name(vc) + ": simulated " + std::to_string(sim.counters.store_sectors_partial) + " vs model " +
                      std::to_string(model.partial_sectors));
        if (vc.shape.n % 4 == 0 && vc.threads_per_row >= 4 && vc.config.transposed) {
            ++aligned;
            v.require(sim.counters.store_sectors_partial == 0, kernel_name(vc) + ": partial sectors in aligned case");
        }
    }
    for (int n : {32, 64}) {
        const auto vc = validate_or_throw(KernelConfig::tsmm(4).with_transposed().with_block_size(64).with_grid(GridPolicy::explicit_grid(2)),
                                          {8, n, 1024}, D, hw);
        const auto ops = seeded_operands(vc, 1);
        ++aligned;
        v.require(simulate(vc, ops.a, ops.b_or_c).counters.store_sectors_partial == 0, "N=" + std::to_string(n) + " partial");
    }
    if (v.pass)
        v.detail = std::to_string(checked) + " TSMM configs agree with the model; " + std::to_string(aligned) +
                   " aligned configs have 0 partial sectors";
    return v;
}

Verdict criterion10() {
    Verdict v;
    auto gen = [](KernelConfig c) { return generate_kernel(validate_or_throw(c, {32, 32, 1 << 16}, D, hw)); };
    const auto a = gen(KernelConfig::tsmttsm(8, 8));
    const auto b = gen(KernelConfig::tsmttsm(5, 5));
    v.require(a.meta.guard_count == 0, "8x8 emits " + std::to_string(a.meta.guard_count) + " guards");
    v.require(b.meta.guard_count > 0 && b.source.find("if (m") != std::string::npos, "5x5 emits no guards");
    int pairs = 0;
    for (auto t : std::vector<Tile>{{8, 8}, {5, 5}, {11, 8}, {1, 32}})
        for (auto s : {D, Z}) {
            const auto off = generate_kernel(validate_or_throw(KernelConfig::tsmttsm(t.m, t.n), {32, 32, 1 << 16}, s, hw));
            const auto on = generate_kernel(
                validate_or_throw(KernelConfig::tsmttsm(t.m, t.n).with_leapfrog(), {32, 32, 1 << 16}, s, hw));
            ++pairs;
            v.require(on.meta.load_statements == 2 * off.meta.load_statements, "leapfrog loads not doubled");
            v.require(on.meta.fma_statements == off.meta.fma_statements, "leapfrog changed the FMA count");
        }
    v.require(gen(KernelConfig::tsmttsm(5, 5)).source == b.source, "5x5 output differs between runs");
    v.require(gen(KernelConfig::tsmttsm(8, 8)).source == a.source, "8x8 output differs between runs");
    if (v.pass)
        v.detail = "8x8: 0 guards, 5x5: " + std::to_string(b.meta.guard_count) + " guards, leapfrog doubles loads in " +
                   std::to_string(pairs) + " pairs, output byte-identical";
    return v;
}

Verdict criterion11() {
    Verdict v;
    const auto dir = std::filesystem::temp_directory_path() / "tskgen_acceptance_runner";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto runner = [&](const std::string& name, const std::string& line) {
        const auto script = dir / name;
        std::ofstream(script) << "#!/bin/sh\necho '" << line << "'\n";
        return "sh " + script.string();
    };

    const auto ranked = rank(enumerate_space({8, 8, 1 << 12}, D, Operation::Tsmm, hw, 64, GridPolicy::explicit_grid(4)), hw);
    auto vc = *ranked.front().validated;
    ExternalRunOptions opts;
    opts.k_rows = 1 << 12;
    vc.shape.k = opts.k_rows;
    const auto ops = seeded_operands(vc, opts.seed);
    const auto sum = hex64(checksum(simulate(vc, ops.a, ops.b_or_c).result));

    const auto good = run_external({ranked.front()}, dir / "good", runner("good.sh", "RESULT gflops=5678.125 checksum=" + sum), opts);
    v.require(good[0].status == TuneStatus::Measured && good[0].measured_gflops == 5678.125,
              "matching checksum not measured exactly");
    const auto bad = run_external({ranked.front()}, dir / "bad", runner("bad.sh", "RESULT gflops=1.0 checksum=0000000000000000"), opts);
    v.require(bad[0].status == TuneStatus::Pruned && bad[0].reason == "wrong-result", "wrong checksum not pruned");
    std::filesystem::remove_all(dir);
    if (v.pass) v.detail = "RESULT line parsed exactly (5678.125 GFlop/s); checksum mismatch pruned as wrong-result";
    return v;
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto exhaustive = exhaustive_cases();
    const auto sampled = random_cases(200);

    const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
        {1, criterion1},
        {2, criterion2},
        {3, criterion3},
        {4, criterion4},
        {5, criterion5},
        {6, [&] { return criterion6(exhaustive, sampled); }},
        {7, [&] { return criterion7(exhaustive, sampled); }},
        {8, criterion8},
        {9, [&] { return criterion9(exhaustive); }},
        {10, criterion10},
        {11, criterion11},
    };
    int failed = 0;
    for (const auto& [id, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        failed += !v.pass;
        std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(), secs);
    return failed == 0 ? 0 : 1;
}
