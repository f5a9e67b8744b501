#pragma once

#include "tskgen/core_model.hpp"
#include "tskgen/perf_model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tskgen {

enum class TuneStatus { Predicted, Measured, Pruned };

std::string to_string(TuneStatus s);

struct TuneResult {
    KernelConfig config;
    std::optional<ValidatedConfig> validated;  // empty when validation rejected the config
    PerfReport report;                         // meaningful only for unpruned entries
    int rank = 0;                              // 1-based among unpruned entries, 0 if pruned
    std::optional<double> measured_gflops;
    TuneStatus status = TuneStatus::Predicted;
    std::string reason;  // why it was pruned: "spill", "register-capped", "invalid: ...", "wrong-result"
    std::string log;     // runner output when an external run failed
};

/// Every candidate for the shape, validated. Spilling and register-capped
/// configs are kept with status Pruned; configs the validator rejects are
/// kept as Pruned("invalid: ...").
std::vector<TuneResult> enumerate_space(const ProblemShape& shape, ScalarKind scalar, Operation op,
                                        const HardwareModel& hw, int block_size = 256,
                                        GridPolicy grid = GridPolicy::fill_device());

/// Scores the unpruned entries and orders them by predicted GFlop/s
/// descending (ties: fewer registers, then enumeration order). Pruned
/// entries follow in their original order.
std::vector<TuneResult> rank(std::vector<TuneResult> candidates, const HardwareModel& hw,
                             const PredictOptions& options = {});

struct ExternalRunOptions {
    std::int64_t k_rows = 1 << 16;  // K the bundles are built and checked for
    std::uint64_t seed = 42;
};

/// For every shortlisted entry: writes its harness bundle into workdir/<kernel name>,
/// runs `runner_command <bundle dir>`, parses the RESULT line and compares its
/// checksum with the simulator's for the same seed and K.
std::vector<TuneResult> run_external(std::vector<TuneResult> shortlist, const std::filesystem::path& workdir,
                                     const std::string& runner_command, const ExternalRunOptions& options = {});

struct RunnerResult {
    double gflops = 0;
    std::uint64_t checksum = 0;
};

/// Finds `RESULT gflops=<decimal> checksum=<16 hex digits>` in runner output.
std::optional<RunnerResult> parse_runner_output(const std::string& output);

std::string tune_csv_header();
std::string tune_csv_row(const TuneResult& r);

}  // namespace tskgen
