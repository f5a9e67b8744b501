#include "tskgen/perf_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();
constexpr auto D = ScalarKind::RealF64;
constexpr auto Z = ScalarKind::ComplexF64;

ValidatedConfig tsmttsm(int m, int n, Tile t, bool lf = false, ScalarKind s = D) {
    return validate_or_throw(KernelConfig::tsmttsm(t.m, t.n).with_leapfrog(lf), {m, n, 1 << 20}, s, hw);
}

}  // namespace

TEST_CASE("arithmetic intensity") {
    CHECK(arithmetic_intensity({64, 64, 1}, D, IntensityMode::Asymptotic) == 8.0);
    CHECK(arithmetic_intensity({1, 1, 1}, D, IntensityMode::Asymptotic) == 0.125);
    CHECK(arithmetic_intensity({2, 2, 4}, D, IntensityMode::Exact) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(arithmetic_intensity({32, 32, 1}, Z, IntensityMode::Asymptotic) == 8.0);
    for (int m = 1; m <= 64; m += 7)
        for (int n = 1; n <= 64; n += 9) {
            const ProblemShape s{m, n, 1'000'000'000};
            const double exact = arithmetic_intensity(s, D, IntensityMode::Exact);
            const double asym = arithmetic_intensity(s, D, IntensityMode::Asymptotic);
            CHECK(std::abs(exact - asym) / asym < 1e-4);
            CHECK(arithmetic_intensity(s, Z, IntensityMode::Exact) == doctest::Approx(2 * exact).epsilon(1e-12));
        }
}

TEST_CASE("roofline") {
    CHECK(roofline_limit(8, 880, hw) == doctest::Approx(7040));
    CHECK(roofline_limit(0.125, 880, hw) == doctest::Approx(110));
    CHECK(roofline_limit(100, 880, hw) == doctest::Approx(hw.peak_gflops()));
    CHECK(roofline_bandwidth(Operation::Tsmttsm, hw) == 880);
    CHECK(roofline_bandwidth(Operation::Tsmm, hw) == 820);
}

TEST_CASE("register estimates") {
    CHECK(tsmttsm_register_estimate({8, 8}, true, D) == 208);
    CHECK(tsmttsm_register_estimate({11, 8}, false, D) == 230);
    CHECK(tsmttsm_register_estimate({12, 12}, false, D) == 352);
    CHECK_FALSE(tsmttsm(64, 64, {11, 8}).spill);
    CHECK(tsmttsm(12, 12, {12, 12}).spill);
    for (int tm = 1; tm < 16; ++tm)
        for (int tn = 1; tn < 16; ++tn)
            for (auto s : {D, Z}) {
                const int base = tsmttsm_register_estimate({tm, tn}, false, s);
                CHECK(tsmttsm_register_estimate({tm, tn}, true, s) >= base);
                CHECK(tsmttsm_register_estimate({tm + 1, tn}, false, s) >= base);
                CHECK(tsmttsm_register_estimate({tm, tn + 1}, false, s) >= base);
            }
    CHECK(tsmm_register_estimate(2, 2, false, D) == 2 * (2 * 3 + 2 + 8));
}

TEST_CASE("occupancy") {
    const auto a = occupancy(176, 256, hw);
    CHECK(a.warps_per_sm == 8);
    CHECK(a.fraction == doctest::Approx(0.125));
    const auto b = occupancy(128, 256, hw);
    CHECK(b.warps_per_sm == 16);
    CHECK(b.fraction == doctest::Approx(0.25));
    const auto c = occupancy(32, 256, hw);
    CHECK(c.warps_per_sm == 64);
    CHECK(c.fraction == doctest::Approx(1.0));
    int last = 64;
    for (int r = 1; r <= 300; ++r) {
        const auto o = occupancy(r, 256, hw);
        CHECK(o.warps_per_sm <= last);
        CHECK(o.fraction > 0);
        CHECK(o.fraction <= 1);
        last = o.warps_per_sm;
    }
}

TEST_CASE("loaded latency") {
    CHECK(loaded_latency(128, 3.0, hw) == doctest::Approx(471).epsilon(0.01));
    CHECK(loaded_latency(40960, 681, hw) == doctest::Approx(664).epsilon(0.01));
    CHECK(loaded_latency(1, hw.clock_hz() * 8 / 1e9, hw) == doctest::Approx(1.0));
    const double base = loaded_latency(1000, 500, hw);
    CHECK(loaded_latency(3000, 500, hw) == doctest::Approx(3 * base));
    CHECK(loaded_latency(1000, 250, hw) == doctest::Approx(2 * base));
}

TEST_CASE("latency curve is anchored on the table") {
    const LatencyCurve curve(hw);
    CHECK(curve.at(3.0) == doctest::Approx(loaded_latency(128, 3.0, hw)));
    CHECK(curve.at(681) == doctest::Approx(loaded_latency(40960, 681, hw)));
    CHECK(curve.at(0.5) == curve.at(3.0));
}

TEST_CASE("utilization at the 64 x 64 plateau") {
    const auto r = predict_performance(tsmttsm(64, 64, {11, 8}), hw);
    CHECK(r.regs_per_thread == 230);
    CHECK(r.warps_per_sm == 8);
    CHECK(r.compute_cycles_per_iter == 352);
    CHECK(r.predicted_utilization >= 0.62);
    CHECK(r.predicted_utilization <= 0.72);
    CHECK(r.predicted_gflops == doctest::Approx(4900).epsilon(0.05));
    CHECK(r.bound == Bound::LatencyBound);
}

TEST_CASE("M = N = 4 reaches the roofline for every tile") {
    for (int tm = 1; tm <= 4; ++tm)
        for (int tn = 1; tn <= 4; ++tn)
            for (bool lf : {false, true}) {
                const auto r = predict_performance(tsmttsm(4, 4, {tm, tn}, lf), hw);
                INFO("tile " << tm << "x" << tn << (lf ? " leapfrog" : ""));
                CHECK(r.bound == Bound::MemoryBound);
                CHECK(r.predicted_gflops == doctest::Approx(440));
            }
}

TEST_CASE("M = N = 4 with multi-cell tiles is memory bound") {
    for (int tm = 1; tm <= 4; ++tm)
        for (int tn = 1; tn <= 4; ++tn)
            for (bool lf : {false, true}) {
                if (tm * tn < 3) continue;
                const auto r = predict_performance(tsmttsm(4, 4, {tm, tn}, lf), hw);
                CHECK(r.bound == Bound::MemoryBound);
                CHECK(r.predicted_gflops == doctest::Approx(440));
            }
}

TEST_CASE("peak cap") {
    HardwareModel fast = hw;
    fast.read_bw_peak = 100000;
    for (auto& row : fast.read_bw.gbs)
        for (auto& v : row) v = 100000;
    for (auto& v : fast.read_bw.unloaded) v = 100000;
    const auto vc = validate_or_throw(KernelConfig::tsmttsm(4, 4).with_leapfrog(), {64, 64, 1 << 20}, D, fast);
    const auto r = predict_performance(vc, fast);
    CHECK(r.predicted_gflops == doctest::Approx(fast.peak_gflops()));
    CHECK(r.bound == Bound::ComputeBound);
}

TEST_CASE("report invariants and leapfrog monotonicity") {
    for (int s : {4, 16, 33, 64})
        for (int tm = 1; tm <= s; tm += 3)
            for (int tn = 1; tn <= s; tn += 5) {
                const auto off = predict_performance(tsmttsm(s, s, {tm, tn}, false), hw);
                const auto on = predict_performance(tsmttsm(s, s, {tm, tn}, true), hw);
                for (const auto& r : {off, on}) {
                    CHECK(r.predicted_gflops <= r.roofline_gflops + 1e-9);
                    CHECK(r.roofline_gflops <= hw.peak_gflops() + 1e-9);
                    CHECK(r.predicted_utilization > 0);
                    CHECK(r.predicted_utilization <= 1);
                    CHECK(r.occupancy_fraction == doctest::Approx(r.warps_per_sm / 64.0));
                }
                if (on.warps_per_sm == off.warps_per_sm)
                    CHECK(on.predicted_utilization >= off.predicted_utilization - 1e-12);
            }
}

TEST_CASE("report formats") {
    const auto r = predict_performance(tsmttsm(8, 8, {4, 4}), hw);
    const auto header = PerfReport::csv_header();
    const auto row = r.to_csv_row();
    CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
    CHECK(r.to_text().find("memory bound") != std::string::npos);
}

TEST_CASE("store sector analysis") {
    auto tsmm = [](int n, int tpr, bool tr) {
        return validate_or_throw(KernelConfig::tsmm(tpr).with_transposed(tr), {4, n, 256}, D, hw);
    };
    CHECK(store_sector_analysis(tsmm(32, 4, true), hw).partial_sectors == 0);
    CHECK(store_sector_analysis(tsmm(8, 4, true), hw).partial_sectors == 0);
    const auto strided = store_sector_analysis(tsmm(5, 1, false), hw);
    CHECK(strided.write_allocate);
    CHECK(strided.partial_sectors == strided.touched_sectors);
    CHECK_THROWS_AS(store_sector_analysis(tsmttsm(4, 4, {2, 2}), hw), ValidationError);
}
