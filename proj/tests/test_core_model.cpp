#include "tskgen/core_model.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();

bool has_warning(const ValidationResult& r, const std::string& text) {
    const auto w = r.warnings();
    return std::any_of(w.begin(), w.end(), [&](const std::string& s) { return s.find(text) != std::string::npos; });
}

std::string strip_field(const std::string& text, const std::string& key) {
    std::string out, line;
    std::istringstream in(text);
    while (std::getline(in, line))
        if (line.rfind(key + " ", 0) != 0) out += line + "\n";
    return out;
}

}  // namespace

TEST_CASE("scalar factors") {
    CHECK(flop_factor(ScalarKind::RealF64) == 2);
    CHECK(flop_factor(ScalarKind::ComplexF64) == 8);
    CHECK(bytes_per_element(ScalarKind::RealF64) == 8);
    CHECK(bytes_per_element(ScalarKind::ComplexF64) == 16);
    CHECK(parse_scalar("z") == ScalarKind::ComplexF64);
    CHECK_THROWS_AS(parse_scalar("s"), ConfigError);
}

TEST_CASE("shape bounds") {
    CHECK_NOTHROW(check_shape({1, 1, 1}));
    CHECK_NOTHROW(check_shape({64, 64, 1}));
    CHECK_THROWS_AS(check_shape({0, 4, 4}), ValidationError);
    CHECK_THROWS_AS(check_shape({4, 65, 4}), ValidationError);
    CHECK_THROWS_AS(check_shape({4, 4, 0}), ValidationError);
}

TEST_CASE("default hardware model") {
    const auto d = load_hardware_model("default");
    CHECK(d.sms == 80);
    CHECK(d.clock_ghz == doctest::Approx(1.38));
    CHECK(d.peak_gflops() == doctest::Approx(7066).epsilon(1.0 / 7066));
    CHECK(d.read_bw.lookup(0.25, 1) == doctest::Approx(681));
}

TEST_CASE("hardware model text round trip and errors") {
    const auto text = format_hardware_model(hw);
    CHECK(format_hardware_model(parse_hardware_model(text)) == text);

    try {
        parse_hardware_model(strip_field(text, "regfile_per_sm"));
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()) == "missing field regfile_per_sm");
    }
    CHECK_THROWS_AS(parse_hardware_model(text + "bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_hardware_model(text + "this line has no equals\n"), ConfigError);
}

TEST_CASE("bandwidth table must grow with occupancy") {
    auto bad = hw;
    bad.read_bw.gbs[2][0] = 100;  // 25%, ILP 1 below the 12.5% row
    CHECK_THROWS_AS(validate_hardware_model(bad), ValidationError);
    CHECK_NOTHROW(validate_hardware_model(hw));  // 887 -> 877 at ILP 16 is within tolerance
}

TEST_CASE("bandwidth lookup interpolates in occupancy and floors ILP") {
    CHECK(hw.read_bw.lookup(0.125, 4) == doctest::Approx(824));
    CHECK(hw.read_bw.lookup(0.1875, 1) == doctest::Approx((419 + 681) / 2.0));
    CHECK(hw.read_bw.lookup(0.25, 7) == doctest::Approx(872));
    CHECK(hw.read_bw.lookup(0.01, 1) == doctest::Approx(228));
}

TEST_CASE("spill flag for full tiles") {
    for (int s = 1; s <= 16; ++s) {
        const auto r = validate_config(KernelConfig::tsmttsm(s, s), {s, s, 1024}, ScalarKind::RealF64, hw);
        REQUIRE(r.ok());
        CHECK_MESSAGE(r.value->spill == (s >= 12), "M=N=" << s);
    }
}

TEST_CASE("guards follow tile divisibility") {
    const auto a = validate_or_throw(KernelConfig::tsmttsm(8, 8), {32, 32, 64}, ScalarKind::RealF64, hw);
    CHECK_FALSE(a.needs_guards);
    const auto b = validate_or_throw(KernelConfig::tsmttsm(5, 3), {32, 32, 64}, ScalarKind::RealF64, hw);
    CHECK(b.needs_guards);
}

TEST_CASE("tiles larger than the shape are clamped") {
    const auto r = validate_config(KernelConfig::tsmttsm(9, 2), {4, 4, 64}, ScalarKind::RealF64, hw);
    REQUIRE(r.ok());
    CHECK(r.value->tile == Tile{4, 2});
    CHECK(has_warning(r, "clamped"));
}

TEST_CASE("mixed op settings are rejected") {
    auto c = KernelConfig::tsmttsm(2, 2);
    c.threads_per_row = 4;
    CHECK_FALSE(validate_config(c, {8, 8, 64}, ScalarKind::RealF64, hw).ok());

    auto t = KernelConfig::tsmm(2);
    t.reduction = Reduction::GlobalAtomic;
    const auto r = validate_config(t, {8, 8, 64}, ScalarKind::RealF64, hw);
    CHECK_FALSE(r.ok());
    CHECK(r.error_text().find("TSMM has no global reduction") != std::string::npos);
}

TEST_CASE("TSMM parameter ranges") {
    CHECK(validate_config(KernelConfig::tsmm(8), {4, 4, 64}, ScalarKind::RealF64, hw).ok());
    CHECK_FALSE(validate_config(KernelConfig::tsmm(16), {4, 4, 64}, ScalarKind::RealF64, hw).ok());
    CHECK_FALSE(validate_config(KernelConfig::tsmm(3), {4, 4, 64}, ScalarKind::RealF64, hw).ok());
    CHECK_FALSE(validate_config(KernelConfig::tsmm(1, 5), {4, 4, 64}, ScalarKind::RealF64, hw).ok());
}

TEST_CASE("reduction none is baseline only") {
    const auto r = validate_config(KernelConfig::tsmttsm(2, 2, Reduction::None), {4, 4, 64}, ScalarKind::RealF64, hw);
    REQUIRE(r.ok());
    CHECK(has_warning(r, "baseline"));
}

TEST_CASE("grid policy") {
    const auto fill = validate_or_throw(KernelConfig::tsmttsm(8, 8), {32, 32, 64}, ScalarKind::RealF64, hw);
    CHECK(fill.total_threads() == static_cast<std::int64_t>(hw.sms) * fill.occupancy.warps_per_sm * 32);
    const auto fixed = validate_or_throw(KernelConfig::tsmttsm(8, 8).with_grid(GridPolicy::explicit_grid(160)),
                                         {32, 32, 64}, ScalarKind::RealF64, hw);
    CHECK(fixed.grid_blocks == 160);
    CHECK_FALSE(validate_config(KernelConfig::tsmttsm(1, 1).with_block_size(64).with_grid(GridPolicy::explicit_grid(1)),
                                {64, 64, 64}, ScalarKind::RealF64, hw)
                    .ok());
}

TEST_CASE("validation is pure") {
    const auto c = KernelConfig::tsmttsm(12, 12).with_leapfrog();
    const auto a = validate_config(c, {12, 12, 99}, ScalarKind::ComplexF64, hw);
    const auto b = validate_config(c, {12, 12, 99}, ScalarKind::ComplexF64, hw);
    CHECK(a.diagnostics == b.diagnostics);
    CHECK(a.value->register_estimate == b.value->register_estimate);
}
