#pragma once

#include "tskgen/core_model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tskgen {

struct LaunchParams {
    int grid_blocks = 0;
    int block_size = 0;
    int shared_bytes = 0;  // dynamic shared memory
};

struct KernelMeta {
    int guard_count = 0;  // guarded tile cells or store slots
    bool uses_shared_memory = false;
    bool leapfrog = false;
    int unroll = 1;
    int register_estimate = 0;
    int load_statements = 0;
    int fma_statements = 0;
    int accumulators = 0;  // scalar accumulator variables declared
};

struct GeneratedKernel {
    std::string source;
    std::string kernel_name;
    LaunchParams launch;
    KernelMeta meta;
};

/// Stable 8-hex-digit content hash of a config and the shape it is specialized for.
std::string config_hash(const ValidatedConfig& vc);

/// <op>_<d|z>_m<M>_n<N>_<hash>
std::string kernel_name(const ValidatedConfig& vc);

/// CUDA source for one size-specialized kernel. Tile and unrolled loops are
/// fully expanded into scalar variables; guards appear only on clipped cells.
GeneratedKernel generate_kernel(const ValidatedConfig& vc);

struct ReductionFragment {
    std::string source;
    int global_atomic_statements = 0;  // per thread
    int shared_atomic_statements = 0;  // per thread
    std::int64_t global_atomics_per_block = 0;  // block-level flush of the local variant
};

/// Final reduction of the thread-local TSMTTSM sums. Throws ValidationError for TSMM.
ReductionFragment generate_reduction(const ValidatedConfig& vc);

struct GeneratedFile {
    std::string name;
    std::string content;
};

struct HarnessBundle {
    std::string kernel_name;
    std::vector<GeneratedFile> files;  // kernel, driver, build + run instructions

    void write_to(const std::filesystem::path& dir) const;
};

/// Kernel plus a driver that fills the operands with seeded_operands(seed),
/// times the launch with device events and prints
///     RESULT gflops=<decimal> checksum=<16 hex digits>
HarnessBundle generate_harness(const ValidatedConfig& vc, std::int64_t k_rows, std::uint64_t seed);

}  // namespace tskgen
