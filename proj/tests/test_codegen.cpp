#include "tskgen/codegen.hpp"
#include "tskgen/mapping.hpp"

#include <doctest.h>

#include <filesystem>
#include <regex>

using namespace tskgen;

namespace {

const HardwareModel hw = HardwareModel::v100();

ValidatedConfig cfg(const KernelConfig& c, ProblemShape s, ScalarKind scalar = ScalarKind::RealF64) {
    return validate_or_throw(c, s, scalar, hw);
}

int count(const std::string& text, const std::string& needle) {
    int n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + needle.size())) ++n;
    return n;
}

int count_regex(const std::string& text, const std::string& pattern) {
    const std::regex re(pattern);
    return static_cast<int>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

/// Text of the first `for (` loop body, braces balanced.
std::string first_loop(const std::string& src) {
    const auto start = src.find("for (; k");
    const auto open = src.find('{', start);
    int depth = 0;
    for (auto i = open; i < src.size(); ++i) {
        if (src[i] == '{') ++depth;
        if (src[i] == '}' && --depth == 0) return src.substr(open, i - open + 1);
    }
    return {};
}

}  // namespace

TEST_CASE("8x8 leapfrog kernel structure") {
    const auto k = generate_kernel(cfg(KernelConfig::tsmttsm(8, 8).with_leapfrog(), {32, 32, 1024}));
    CHECK(k.meta.accumulators == 64);
    CHECK(count_regex(k.source, R"(double s\d+_\d+ = 0\.0;)") == 64);
    CHECK(k.meta.load_statements == 32);
    CHECK(count_regex(k.source, R"(= [AB]\[)") == 32);
    CHECK(k.meta.guard_count == 0);
    CHECK(count(first_loop(k.source), "if (") == 0);
}

TEST_CASE("guards appear only for clipped tiles") {
    const auto vc = cfg(KernelConfig::tsmttsm(5, 5), {32, 32, 1024});
    const auto k = generate_kernel(vc);
    CHECK(k.meta.guard_count > 0);
    CHECK(k.meta.guard_count == static_cast<int>(guarded_tile_slots(vc).size()));
    CHECK(count(first_loop(k.source), "if (") == k.meta.guard_count);
}

TEST_CASE("leapfrog doubles loads and keeps FMAs") {
    for (auto t : std::vector<Tile>{{8, 8}, {5, 3}, {1, 7}})
        for (auto s : {ScalarKind::RealF64, ScalarKind::ComplexF64}) {
            const auto off = generate_kernel(cfg(KernelConfig::tsmttsm(t.m, t.n), {32, 32, 64}, s));
            const auto on = generate_kernel(cfg(KernelConfig::tsmttsm(t.m, t.n).with_leapfrog(), {32, 32, 64}, s));
            CHECK(on.meta.load_statements == 2 * off.meta.load_statements);
            CHECK(on.meta.fma_statements == off.meta.fma_statements);
        }
}

TEST_CASE("complex cells take four FMAs") {
    const auto k = generate_kernel(cfg(KernelConfig::tsmttsm(2, 3), {4, 6, 64}, ScalarKind::ComplexF64));
    CHECK(k.meta.fma_statements == 4 * 6);
    CHECK(count(k.source, "= fma(") == 4 * 6);
}

TEST_CASE("TSMM shared C with unroll 2") {
    const auto vc = cfg(KernelConfig::tsmm(4, 2, CSource::SharedMemory), {4, 8, 1024});
    const auto k = generate_kernel(vc);
    CHECK(count(k.source, "cooperative preload of C") == 1);
    CHECK(k.meta.uses_shared_memory);
    CHECK(k.launch.shared_bytes == 4 * 8 * 8);
    const auto loop = first_loop(k.source);
    CHECK(count(loop, "// row k + ") == 2);
    CHECK(k.meta.guard_count == 0);
}

TEST_CASE("TSMM guards on store slots") {
    const auto k = generate_kernel(cfg(KernelConfig::tsmm(4).with_transposed(), {4, 6, 64}));
    CHECK(k.meta.guard_count == 1);
    CHECK(count(first_loop(k.source), "if (n1 < 6)") == 1);
}

TEST_CASE("reduction fragments") {
    const auto g = generate_reduction(cfg(KernelConfig::tsmttsm(2, 3), {4, 6, 64}));
    CHECK(g.global_atomic_statements == 6);
    CHECK(count(g.source, "atomicAdd(&C[") == 6);

    const auto l = generate_reduction(cfg(KernelConfig::tsmttsm(2, 2, Reduction::LocalThenGlobalAtomic), {4, 4, 64}));
    CHECK(l.global_atomics_per_block == 16);
    CHECK(l.shared_atomic_statements == 4);

    try {
        generate_reduction(cfg(KernelConfig::tsmm(2), {4, 4, 64}));
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()) == "TSMM has no global reduction");
    }
}

TEST_CASE("names and determinism") {
    const auto vc = cfg(KernelConfig::tsmttsm(8, 8), {32, 32, 1024});
    CHECK(kernel_name(vc) == "tsmttsm_d_m32_n32_ef028eca");
    CHECK(generate_kernel(vc).source == generate_kernel(vc).source);
    const auto other = cfg(KernelConfig::tsmttsm(8, 8).with_transposed(), {32, 32, 1024});
    CHECK(config_hash(other) != config_hash(vc));
    auto faulty = KernelConfig::tsmttsm(8, 8);
    faulty.fault = MappingFault::OffByOne;
    CHECK(config_hash(cfg(faulty, {32, 32, 1024})) == config_hash(vc));
}

TEST_CASE("harness bundle") {
    const auto vc = cfg(KernelConfig::tsmm(2, 2), {8, 8, 4096});
    const auto b = generate_harness(vc, 4096, 42);
    REQUIRE(b.files.size() == 3);
    CHECK(b.files[0].name == b.kernel_name + ".cu");
    CHECK(b.files[1].name == b.kernel_name + "_driver.cu");
    CHECK(b.files[2].name == b.kernel_name + "_build.txt");
    CHECK(b.files[1].content.find("RESULT gflops=%.3f checksum=%016llx") != std::string::npos);
    CHECK(b.files[1].content.find("dim3 grid(" + std::to_string(vc.grid_blocks) + ")") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "tskgen_bundle_test";
    std::filesystem::remove_all(dir);
    b.write_to(dir);
    for (const auto& f : b.files) CHECK(std::filesystem::exists(dir / f.name));
    std::filesystem::remove_all(dir);
}

TEST_CASE("explicit grid passes through") {
    const auto k = generate_kernel(cfg(KernelConfig::tsmttsm(4, 4).with_grid(GridPolicy::explicit_grid(160)), {8, 8, 64}));
    CHECK(k.launch.grid_blocks == 160);
}
