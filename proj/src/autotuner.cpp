#include "tskgen/autotuner.hpp"

#include "tskgen/codegen.hpp"
#include "tskgen/simulator.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <regex>
#include <sstream>
#include <sys/wait.h>

namespace tskgen {

std::string to_string(TuneStatus s) {
    switch (s) {
        case TuneStatus::Predicted: return "Predicted";
        case TuneStatus::Measured: return "Measured";
        case TuneStatus::Pruned: return "Pruned";
    }
    return "?";
}

namespace {

TuneResult make_candidate(const KernelConfig& config, const ProblemShape& shape, ScalarKind scalar,
                          const HardwareModel& hw) {
    TuneResult r;
    r.config = config;
    auto v = validate_config(config, shape, scalar, hw);
    if (!v.ok()) {
        r.status = TuneStatus::Pruned;
        r.reason = "invalid: " + v.error_text();
        return r;
    }
    r.validated = std::move(v.value);
    if (r.validated->spill) {
        r.status = TuneStatus::Pruned;
        r.reason = "spill";
    } else if (r.validated->occupancy.register_capped) {
        r.status = TuneStatus::Pruned;
        r.reason = "register-capped";
    }
    return r;
}

}  // namespace

std::vector<TuneResult> enumerate_space(const ProblemShape& shape, ScalarKind scalar, Operation op,
                                        const HardwareModel& hw, int block_size, GridPolicy grid) {
    check_shape(shape);
    std::vector<TuneResult> out;
    const int M = static_cast<int>(shape.m);
    const int N = static_cast<int>(shape.n);
    if (op == Operation::Tsmttsm) {
        for (int tm = 1; tm <= M; ++tm)
            for (int tn = 1; tn <= N; ++tn)
                for (bool lf : {false, true})
                    for (bool tr : {false, true})
                        for (Reduction red : {Reduction::GlobalAtomic, Reduction::LocalThenGlobalAtomic}) {
                            auto c = KernelConfig::tsmttsm(tm, tn, red)
                                         .with_leapfrog(lf)
                                         .with_transposed(tr)
                                         .with_block_size(block_size)
                                         .with_grid(grid);
                            out.push_back(make_candidate(c, shape, scalar, hw));
                        }
    } else {
        for (int tpr : {1, 2, 4, 8, 16, 32}) {
            if (tpr > 2 * N) continue;
            for (int u = 1; u <= 4; ++u)
                for (CSource cs : {CSource::Registers, CSource::SharedMemory, CSource::GlobalCached})
                    for (bool tr : {false, true}) {
                        auto c = KernelConfig::tsmm(tpr, u, cs).with_transposed(tr).with_block_size(block_size).with_grid(grid);
                        out.push_back(make_candidate(c, shape, scalar, hw));
                    }
        }
    }
    return out;
}

std::vector<TuneResult> rank(std::vector<TuneResult> candidates, const HardwareModel& hw, const PredictOptions& options) {
    std::vector<TuneResult> live, pruned;
    for (auto& c : candidates) {
        if (c.status == TuneStatus::Pruned) {
            c.rank = 0;
            pruned.push_back(std::move(c));
        } else {
            c.report = predict_performance(*c.validated, hw, options);
            live.push_back(std::move(c));
        }
    }
    std::stable_sort(live.begin(), live.end(), [](const TuneResult& a, const TuneResult& b) {
        if (a.report.predicted_gflops != b.report.predicted_gflops)
            return a.report.predicted_gflops > b.report.predicted_gflops;
        return a.validated->register_estimate < b.validated->register_estimate;
    });
    for (std::size_t i = 0; i < live.size(); ++i) live[i].rank = static_cast<int>(i) + 1;
    live.insert(live.end(), std::make_move_iterator(pruned.begin()), std::make_move_iterator(pruned.end()));
    return live;
}

std::optional<RunnerResult> parse_runner_output(const std::string& output) {
    static const std::regex line(R"(RESULT gflops=([0-9]+(?:\.[0-9]*)?(?:[eE][-+]?[0-9]+)?) checksum=([0-9a-fA-F]{16}))");
    std::smatch m;
    if (!std::regex_search(output, m, line)) return std::nullopt;
    RunnerResult r;
    r.gflops = std::stod(m[1].str());
    r.checksum = std::stoull(m[2].str(), nullptr, 16);
    return r;
}

namespace {

struct CommandOutput {
    int exit_code = -1;
    std::string text;
};

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

CommandOutput run_command(const std::string& command) {
    CommandOutput out;
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) {
        out.text = "cannot start: " + command;
        return out;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.text.append(buf.data(), n);
    const int status = pclose(pipe);
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

}  // namespace

std::vector<TuneResult> run_external(std::vector<TuneResult> shortlist, const std::filesystem::path& workdir,
                                     const std::string& runner_command, const ExternalRunOptions& options) {
    for (auto& entry : shortlist) {
        if (entry.status == TuneStatus::Pruned || !entry.validated) continue;
        // Nothing in validation depends on K, so the bundle is the same config at the reduced K.
        ValidatedConfig vc = *entry.validated;
        vc.shape.k = options.k_rows;

        const auto bundle = generate_harness(vc, options.k_rows, options.seed);
        const auto dir = workdir / bundle.kernel_name;
        bundle.write_to(dir);

        const auto run = run_command(runner_command + " " + shell_quote(dir.string()));
        if (run.exit_code != 0) {
            entry.log = "runner exited with " + std::to_string(run.exit_code) + "\n" + run.text;
            continue;
        }
        const auto parsed = parse_runner_output(run.text);
        if (!parsed) {
            entry.log = "no RESULT line in runner output\n" + run.text;
            continue;
        }
        const auto ops = seeded_operands(vc, options.seed);
        const auto expected = checksum(simulate(vc, ops.a, ops.b_or_c).result);
        if (parsed->checksum != expected) {
            entry.status = TuneStatus::Pruned;
            entry.reason = "wrong-result";
            entry.log = "checksum " + hex64(parsed->checksum) + ", expected " + hex64(expected);
            continue;
        }
        entry.measured_gflops = parsed->gflops;
        entry.status = TuneStatus::Measured;
    }
    return shortlist;
}

std::string tune_csv_header() {
    return "m,n,k,op,scalar,config_hash,tm,tn,tpr,unroll,leapfrog,transposed,reduction,c_source,regs,warps,"
           "predicted_gflops,measured_gflops,status";
}

std::string tune_csv_row(const TuneResult& r) {
    std::ostringstream os;
    const auto& c = r.config;
    const bool tsmttsm = c.op == Operation::Tsmttsm;
    if (r.validated) {
        const auto& v = *r.validated;
        os << v.shape.m << ',' << v.shape.n << ',' << v.shape.k << ',' << to_string(c.op) << ',' << scalar_code(v.scalar)
           << ',' << config_hash(v) << ',';
        if (tsmttsm)
            os << v.tile.m << ',' << v.tile.n << ",,,";
        else
            os << ",," << v.threads_per_row << ',' << v.unroll << ',';
        os << (c.leapfrog ? 1 : 0) << ',' << (c.transposed ? 1 : 0) << ',' << (tsmttsm ? to_string(v.reduction) : "")
           << ',' << (tsmttsm ? "" : to_string(v.c_source)) << ',' << v.register_estimate << ','
           << v.occupancy.warps_per_sm << ',';
    } else {
        os << ",,," << to_string(c.op) << ",,,";
        if (tsmttsm && c.tile)
            os << c.tile->m << ',' << c.tile->n << ",,,";
        else
            os << ",," << c.threads_per_row.value_or(0) << ',' << c.unroll.value_or(0) << ',';
        os << (c.leapfrog ? 1 : 0) << ',' << (c.transposed ? 1 : 0) << ",,,,,";
    }
    char buf[64];
    if (r.status != TuneStatus::Pruned) {
        std::snprintf(buf, sizeof buf, "%.3f", r.report.predicted_gflops);
        os << buf;
    }
    os << ',';
    if (r.measured_gflops) {
        std::snprintf(buf, sizeof buf, "%.3f", *r.measured_gflops);
        os << buf;
    }
    os << ',';
    if (r.status == TuneStatus::Pruned)
        os << "Pruned(" << (r.reason.rfind("invalid", 0) == 0 ? std::string("invalid") : r.reason) << ')';
    else
        os << to_string(r.status);
    return os.str();
}

}  // namespace tskgen
