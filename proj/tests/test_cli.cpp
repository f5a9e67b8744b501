#include "tskgen/cli.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace tskgen;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::filesystem::path tmp(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("generate") {
    const auto dir = tmp("tskgen_cli_gen");
    const auto r = run({"generate", "--op", "tsmttsm", "--m", "32", "--n", "32", "--dtype", "d", "--tile", "8x8",
                        "--leapfrog", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("registers=208") != std::string::npos);
    CHECK(r.out.find("guards=0") != std::string::npos);
    int files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("generate usage errors and warnings") {
    CHECK(run({"generate", "--m", "32", "--n", "32", "--tile", "0x8"}).code == 2);
    CHECK(run({"generate", "--m", "32", "--n", "32", "--tile", "8by8"}).code == 2);
    CHECK(run({"generate", "--m", "65", "--n", "32", "--tile", "8x8"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    const auto dir = tmp("tskgen_cli_spill");
    const auto r = run({"generate", "--tile", "12x12", "--m", "12", "--n", "12", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("estimated 352 regs > 256: spilling") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("analyze") {
    const auto r = run({"analyze", "--m", "64", "--n", "64", "--dtype", "d", "--tile", "8x8"});
    REQUIRE(r.code == 0);
    const auto l = lines(r.out);
    REQUIRE(l.size() == 2);
    CHECK(l[1].rfind("8,7040,", 0) == 0);

    const auto z = run({"analyze", "--m", "32", "--dtype", "z"});
    REQUIRE(z.code == 0);
    CHECK(lines(z.out)[1].rfind("8,", 0) == 0);

    CHECK(run({"analyze", "--op", "tsmttsm", "--m", "32"}).code == 2);

    const auto exact = run({"analyze", "--m", "2", "--n", "2", "--k", "4", "--tile", "1x1", "--exact"});
    CHECK(lines(exact.out)[1].rfind("0.2,", 0) == 0);
}

TEST_CASE("verify") {
    const auto ok = run({"verify", "--m", "6", "--n", "5", "--tile", "4x2", "--transposed", "--k", "4096"});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("verdict=pass") != std::string::npos);
    CHECK(ok.out.find("max_rel_err=") != std::string::npos);

    const auto base = run({"verify", "--m", "4", "--n", "4", "--tile", "2x2", "--reduction", "none", "--k", "512"});
    CHECK(base.code == 0);
    CHECK(base.err.find("baseline") != std::string::npos);
    CHECK(base.out.find("comparison=skipped") != std::string::npos);

    const auto bad = run({"verify", "--m", "4", "--n", "4", "--op", "tsmm", "--tpr", "2", "--k", "512", "--inject-fault"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("verdict=fail") != std::string::npos);
}

TEST_CASE("verify at the default K") {
    const auto r = run({"verify", "--m", "16", "--n", "16", "--tile", "4x4", "--leapfrog"});
    CHECK(r.code == 0);
    CHECK(r.out.find("fma_ops=" + std::to_string(16LL * 16 * 65536)) != std::string::npos);
}

TEST_CASE("sweep") {
    const auto r = run({"sweep", "--m-range", "1..24"});
    REQUIRE(r.code == 0);
    const auto l = lines(r.out);
    REQUIRE(l.size() == 25);
    CHECK(l[0] == "size,roofline_gflops,predicted_gflops,ratio");
    double last = 0;
    for (std::size_t i = 1; i < l.size(); ++i) {
        std::istringstream in(l[i]);
        std::string size, roof, pred, ratio;
        std::getline(in, size, ',');
        std::getline(in, roof, ',');
        std::getline(in, pred, ',');
        std::getline(in, ratio, ',');
        CHECK(std::stod(roof) == doctest::Approx(std::min(std::stoi(size) / 8.0 * 880, 7065.6)));
        CHECK(std::stod(roof) >= last);
        last = std::stod(roof);
        if (std::stoi(size) <= 20) CHECK(ratio == "1.0000");
    }
    CHECK(lines(run({"sweep", "--m-range", "4..4"}).out).size() == 2);
    CHECK(run({"sweep", "--m-range", "0..70"}).code == 2);
}

TEST_CASE("tune") {
    const auto r = run({"tune", "--m", "4", "--n", "4", "--op", "tsmm", "--top", "5"});
    REQUIRE(r.code == 0);
    const auto l = lines(r.out);
    REQUIRE(l.size() == 6);
    CHECK(l[0].rfind("m,n,k,op,scalar,config_hash", 0) == 0);
    CHECK(run({"tune", "--m", "4", "--n", "4"}).out == run({"tune", "--m", "4", "--n", "4"}).out);
}

TEST_CASE("dump-mapping") {
    const auto r = run({"dump-mapping", "--m", "4", "--n", "6", "--tile", "2x3"});
    CHECK(r.code == 0);
    CHECK(r.out.find("threads_per_slice=4") != std::string::npos);
}

TEST_CASE("hardware model from the environment") {
    setenv("TSKGEN_HW", "/nonexistent/hw.txt", 1);
    CHECK(run({"analyze", "--m", "8", "--tile", "2x2"}).code == 2);
    unsetenv("TSKGEN_HW");
    CHECK(run({"analyze", "--m", "8", "--tile", "2x2"}).code == 0);
}
