#include "tskgen/codegen.hpp"

#include "tskgen/mapping.hpp"
#include "tskgen/perf_model.hpp"
#include "tskgen/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace tskgen {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

/// Line-oriented writer with fixed four-space indentation.
class SourceWriter {
public:
    void line(const std::string& text = {}) {
        if (!text.empty()) out_ << std::string(static_cast<std::size_t>(depth_) * 4, ' ') << text;
        out_ << '\n';
    }
    void open(const std::string& text) {
        line(text + " {");
        ++depth_;
    }
    void close(const std::string& suffix = {}) {
        --depth_;
        line("}" + suffix);
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
    int depth_ = 0;
};

std::string str(std::int64_t v) { return std::to_string(v); }

std::string canonical(const ValidatedConfig& vc) {
    std::ostringstream os;
    const auto& c = vc.config;
    os << "op=" << to_string(c.op) << ";m=" << vc.shape.m << ";n=" << vc.shape.n << ";scalar=" << scalar_code(vc.scalar);
    if (c.op == Operation::Tsmttsm)
        os << ";tile=" << vc.tile.m << "x" << vc.tile.n << ";reduction=" << to_string(vc.reduction)
           << ";conj=" << c.conjugate_a;
    else
        os << ";tpr=" << vc.threads_per_row << ";unroll=" << vc.unroll << ";c=" << to_string(vc.c_source);
    os << ";transposed=" << c.transposed << ";leapfrog=" << c.leapfrog << ";block=" << c.block_size
       << ";grid=" << (c.grid.explicit_blocks ? str(*c.grid.explicit_blocks) : std::string("fill"));
    return os.str();
}

/// Names for one scalar value: {"x"} for real, {"x_re", "x_im"} for complex.
std::vector<std::string> parts(const std::string& base, bool cplx) {
    if (!cplx) return {base};
    return {base + "_re", base + "_im"};
}

/// Real FMA statements of acc += a * b.
std::vector<std::string> fma_lines(const std::string& acc, const std::string& a, const std::string& b, bool cplx,
                                   bool conj_a = false) {
    if (!cplx) return {acc + " = fma(" + a + ", " + b + ", " + acc + ");"};
    const std::string re = acc + "_re", im = acc + "_im";
    const std::string ar = a + "_re", ai = a + "_im", br = b + "_re", bi = b + "_im";
    if (!conj_a)
        return {re + " = fma(" + ar + ", " + br + ", " + re + ");", re + " = fma(-" + ai + ", " + bi + ", " + re + ");",
                im + " = fma(" + ar + ", " + bi + ", " + im + ");", im + " = fma(" + ai + ", " + br + ", " + im + ");"};
    return {re + " = fma(" + ar + ", " + br + ", " + re + ");", re + " = fma(" + ai + ", " + bi + ", " + re + ");",
            im + " = fma(" + ar + ", " + bi + ", " + im + ");", im + " = fma(-" + ai + ", " + br + ", " + im + ");"};
}

/// Load statements of one element: `decl name = ARRAY[index]` (two for complex).
std::vector<std::string> load_lines(const std::string& decl, const std::string& name, const std::string& array,
                                    const std::string& index, bool cplx) {
    if (!cplx) return {decl + name + " = " + array + "[" + index + "];"};
    return {decl + name + "_re = " + array + "[2 * (" + index + ")];",
            decl + name + "_im = " + array + "[2 * (" + index + ") + 1];"};
}

/// Matrix index of tile slot `t` for tile index `idx` (see assign_tsmttsm).
std::string index_expr(bool transposed, const std::string& idx, int t, int tile, int size) {
    const std::string blocked = idx + " * " + str(tile) + " + " + str(t);
    if (!transposed) return blocked;
    const int full = size / tile;
    const std::string strided = str(t) + " * " + str(full) + " + " + idx;
    if (full * tile == size) return strided;
    return "(" + idx + " < " + str(full) + " ? " + strided + " : " + blocked + ")";
}

struct TsmttsmLayout {
    int TM, TN, M, N;
    std::int64_t tps, m_tiles, n_tiles;
    std::set<int> guarded_m, guarded_n;  // tile rows / cols that clip for some thread
    std::set<TileSlot> guarded;

    explicit TsmttsmLayout(const ValidatedConfig& vc)
        : TM(vc.tile.m), TN(vc.tile.n), M(static_cast<int>(vc.shape.m)), N(static_cast<int>(vc.shape.n)),
          tps(vc.threads_per_slice()), m_tiles(ceil_div(M, TM)), n_tiles(ceil_div(N, TN)) {
        for (const auto& s : guarded_tile_slots(vc)) guarded.insert(s);
        // A slot clips only in the trailing partial tile, in either mapping.
        for (int tm = 0; tm < TM; ++tm)
            if ((m_tiles - 1) * TM + tm >= M) guarded_m.insert(tm);
        for (int tn = 0; tn < TN; ++tn)
            if ((n_tiles - 1) * TN + tn >= N) guarded_n.insert(tn);
    }

    std::string guard(int tm, int tn) const {
        std::string cond;
        if (guarded_m.count(tm)) cond = "m" + str(tm) + " < " + str(M);
        if (guarded_n.count(tn)) cond += (cond.empty() ? "" : " && ") + ("n" + str(tn) + " < " + str(N));
        return cond;
    }
    std::string a_index(int tm) const { return guarded_m.count(tm) ? "am" + str(tm) : "m" + str(tm); }
    std::string b_index(int tn) const { return guarded_n.count(tn) ? "bn" + str(tn) : "n" + str(tn); }
};

void emit_tsmttsm_reduction(SourceWriter& w, const ValidatedConfig& vc, const TsmttsmLayout& L, ReductionFragment& frag) {
    const bool cplx = vc.scalar == ScalarKind::ComplexF64;
    const int width = cplx ? 2 : 1;
    auto element = [&](int tm, int tn) { return "m" + str(tm) + " * " + str(L.N) + " + n" + str(tn); };

    switch (vc.reduction) {
        case Reduction::GlobalAtomic: {
            w.line("// global reduction: one atomic per thread-local result");
            w.open("if (active)");
            for (int tm = 0; tm < L.TM; ++tm)
                for (int tn = 0; tn < L.TN; ++tn) {
                    const auto acc = "s" + str(tm) + "_" + str(tn);
                    const auto cond = L.guard(tm, tn);
                    std::string stmts;
                    const auto names = parts(acc, cplx);
                    for (int p = 0; p < width; ++p) {
                        const auto idx = cplx ? "2 * (" + element(tm, tn) + ")" + (p ? " + 1" : "") : element(tm, tn);
                        stmts += (stmts.empty() ? "" : " ") + ("atomicAdd(&C[" + idx + "], " + names[p] + ");");
                        ++frag.global_atomic_statements;
                    }
                    w.line(cond.empty() ? stmts : "if (" + cond + ") { " + stmts + " }");
                }
            w.close();
            break;
        }
        case Reduction::LocalThenGlobalAtomic: {
            const std::int64_t count = vc.shape.m * vc.shape.n * width;
            w.line("// block-local reduction in shared memory, then one global atomic per block and result");
            w.line("extern __shared__ double sC[];");
            w.line("for (int i = threadIdx.x; i < " + str(count) + "; i += blockDim.x) sC[i] = 0.0;");
            w.line("__syncthreads();");
            w.open("if (active)");
            for (int tm = 0; tm < L.TM; ++tm)
                for (int tn = 0; tn < L.TN; ++tn) {
                    const auto acc = "s" + str(tm) + "_" + str(tn);
                    const auto cond = L.guard(tm, tn);
                    std::string stmts;
                    const auto names = parts(acc, cplx);
                    for (int p = 0; p < width; ++p) {
                        const auto idx = cplx ? "2 * (" + element(tm, tn) + ")" + (p ? " + 1" : "") : element(tm, tn);
                        stmts += (stmts.empty() ? "" : " ") + ("atomicAdd(&sC[" + idx + "], " + names[p] + ");");
                        ++frag.shared_atomic_statements;
                    }
                    w.line(cond.empty() ? stmts : "if (" + cond + ") { " + stmts + " }");
                }
            w.close();
            w.line("__syncthreads();");
            w.line("for (int i = threadIdx.x; i < " + str(count) + "; i += blockDim.x) atomicAdd(&C[i], sC[i]);");
            frag.global_atomics_per_block = vc.shape.m * vc.shape.n;
            break;
        }
        case Reduction::None: {
            w.line("// baseline: results are discarded");
            w.line("volatile double sink;");
            for (int tm = 0; tm < L.TM; ++tm)
                for (int tn = 0; tn < L.TN; ++tn)
                    for (const auto& name : parts("s" + str(tm) + "_" + str(tn), cplx)) w.line("sink = " + name + ";");
            break;
        }
    }
}

GeneratedKernel generate_tsmttsm(const ValidatedConfig& vc) {
    GeneratedKernel k;
    k.kernel_name = kernel_name(vc);
    const TsmttsmLayout L(vc);
    const bool cplx = vc.scalar == ScalarKind::ComplexF64;
    const bool lf = vc.config.leapfrog;
    const bool conj = vc.config.conjugate_a && cplx;
    auto& meta = k.meta;

    SourceWriter w;
    w.line("// " + k.kernel_name + ": C = A^T * B with A K x " + str(L.M) + ", B K x " + str(L.N) + " (row-major)");
    w.line("// tile " + str(L.TM) + "x" + str(L.TN) + (vc.config.transposed ? " transposed" : "") +
           (lf ? ", leap frog" : "") + ", " + str(L.tps) + " threads per slice, reduction " +
           to_string(vc.reduction));
    w.line();
    w.line("extern \"C\" __global__ void __launch_bounds__(" + str(vc.config.block_size) + ")");
    w.open(k.kernel_name + "(const double* __restrict__ A, const double* __restrict__ B, double* __restrict__ C, const long long K)");
    w.line("const long long tid = (long long)blockIdx.x * blockDim.x + threadIdx.x;");
    w.line("const long long groups = ((long long)gridDim.x * blockDim.x) / " + str(L.tps) + ";");
    w.line("const bool active = tid < groups * " + str(L.tps) + ";");
    w.line("const int local = (int)(tid % " + str(L.tps) + ");");
    w.line("const int midx = local % " + str(L.m_tiles) + ";");
    w.line("const int nidx = local / " + str(L.m_tiles) + ";");
    for (int tm = 0; tm < L.TM; ++tm) {
        const auto expr = index_expr(vc.config.transposed, "midx", tm, L.TM, L.M);
        w.line("const int m" + str(tm) + " = " + expr + ";");
        if (L.guarded_m.count(tm))
            w.line("const int am" + str(tm) + " = min(m" + str(tm) + ", " + str(L.M - 1) + ");");
    }
    for (int tn = 0; tn < L.TN; ++tn) {
        const auto expr = index_expr(vc.config.transposed, "nidx", tn, L.TN, L.N);
        w.line("const int n" + str(tn) + " = " + expr + ";");
        if (L.guarded_n.count(tn))
            w.line("const int bn" + str(tn) + " = min(n" + str(tn) + ", " + str(L.N - 1) + ");");
    }
    w.line();
    for (int tm = 0; tm < L.TM; ++tm)
        for (int tn = 0; tn < L.TN; ++tn)
            for (const auto& name : parts("s" + str(tm) + "_" + str(tn), cplx)) {
                w.line("double " + name + " = 0.0;");
                ++meta.accumulators;
            }
    w.line();
    w.line("long long k = active ? tid / " + str(L.tps) + " : K;");

    auto emit_loads = [&](const std::string& decl, const std::string& prefix, const std::string& row) {
        for (int tm = 0; tm < L.TM; ++tm)
            for (const auto& s : load_lines(decl, prefix + "a" + str(tm), "A", row + " * " + str(L.M) + " + " + L.a_index(tm), cplx)) {
                w.line(s);
                ++meta.load_statements;
            }
        for (int tn = 0; tn < L.TN; ++tn)
            for (const auto& s : load_lines(decl, prefix + "b" + str(tn), "B", row + " * " + str(L.N) + " + " + L.b_index(tn), cplx)) {
                w.line(s);
                ++meta.load_statements;
            }
    };
    auto emit_fmas = [&]() {
        for (int tm = 0; tm < L.TM; ++tm)
            for (int tn = 0; tn < L.TN; ++tn) {
                const auto lines = fma_lines("s" + str(tm) + "_" + str(tn), "a" + str(tm), "b" + str(tn), cplx, conj);
                meta.fma_statements += static_cast<int>(lines.size());
                const auto cond = L.guard(tm, tn);
                if (cond.empty()) {
                    for (const auto& s : lines) w.line(s);
                } else {
                    w.open("if (" + cond + ")");
                    for (const auto& s : lines) w.line(s);
                    w.close();
                }
            }
    };

    if (lf) {
        w.line("// leap frog: current values loaded one iteration ahead");
        w.line("const long long k0 = min(k, K - 1);");
        emit_loads("double ", "", "k0");
        w.open("for (; k < K; k += groups)");
        w.line("const long long kn = min(k + groups, K - 1);");
        emit_loads("const double ", "n", "kn");
        emit_fmas();
        for (int tm = 0; tm < L.TM; ++tm)
            for (const auto& name : parts("a" + str(tm), cplx)) w.line(name + " = n" + name + ";");
        for (int tn = 0; tn < L.TN; ++tn)
            for (const auto& name : parts("b" + str(tn), cplx)) w.line(name + " = n" + name + ";");
        w.close();
    } else {
        w.open("for (; k < K; k += groups)");
        emit_loads("const double ", "", "k");
        emit_fmas();
        w.close();
    }
    w.line();

    ReductionFragment frag;
    emit_tsmttsm_reduction(w, vc, L, frag);
    w.close();

    k.source = w.str();
    meta.guard_count = static_cast<int>(L.guarded.size());
    meta.uses_shared_memory = vc.reduction == Reduction::LocalThenGlobalAtomic;
    meta.leapfrog = lf;
    meta.unroll = 1;
    meta.register_estimate = vc.register_estimate;
    k.launch = {vc.grid_blocks, vc.config.block_size,
                meta.uses_shared_memory ? static_cast<int>(vc.shape.m * vc.shape.n * bytes_per_element(vc.scalar)) : 0};
    return k;
}

GeneratedKernel generate_tsmm(const ValidatedConfig& vc) {
    GeneratedKernel k;
    k.kernel_name = kernel_name(vc);
    auto& meta = k.meta;
    const bool cplx = vc.scalar == ScalarKind::ComplexF64;
    const bool lf = vc.config.leapfrog;
    const int M = static_cast<int>(vc.shape.m);
    const int N = static_cast<int>(vc.shape.n);
    const int tpr = vc.threads_per_row;
    const int rpt = vc.results_per_thread();
    const int U = vc.unroll;
    const auto guarded = guarded_column_slots(vc);
    const std::set<int> guarded_j(guarded.begin(), guarded.end());
    const auto col_index = [&](int j) { return guarded_j.count(j) ? "cn" + str(j) : "n" + str(j); };
    const std::int64_t c_count = static_cast<std::int64_t>(M) * N * (cplx ? 2 : 1);

    SourceWriter w;
    w.line("// " + k.kernel_name + ": B = A * C with A K x " + str(M) + ", C " + str(M) + " x " + str(N) + " (row-major)");
    w.line("// " + str(tpr) + " threads per row" + (vc.config.transposed ? " interleaved" : "") + ", unroll " + str(U) +
           ", C from " + to_string(vc.c_source) + (lf ? ", leap frog" : ""));
    w.line();
    w.line("extern \"C\" __global__ void __launch_bounds__(" + str(vc.config.block_size) + ")");
    w.open(k.kernel_name + "(const double* __restrict__ A, const double* __restrict__ C, double* __restrict__ B, const long long K)");
    w.line("const long long tid = (long long)blockIdx.x * blockDim.x + threadIdx.x;");
    w.line("const long long groups = ((long long)gridDim.x * blockDim.x) / " + str(tpr) + ";");
    w.line("const bool active = tid < groups * " + str(tpr) + ";");
    w.line("const int lane = (int)(tid % " + str(tpr) + ");");
    w.line("const long long group = tid / " + str(tpr) + ";");
    for (int j = 0; j < rpt; ++j) {
        const auto expr = vc.config.transposed ? "lane + " + str(j * tpr) : "lane * " + str(rpt) + " + " + str(j);
        w.line("const int n" + str(j) + " = " + expr + ";");
        if (guarded_j.count(j)) w.line("const int cn" + str(j) + " = min(n" + str(j) + ", " + str(N - 1) + ");");
    }
    w.line();

    std::string c_array = "C";
    if (vc.c_source == CSource::SharedMemory) {
        w.line("// cooperative preload of C into shared memory");
        w.line("extern __shared__ double sC[];");
        w.line("for (int i = threadIdx.x; i < " + str(c_count) + "; i += blockDim.x) sC[i] = C[i];");
        w.line("__syncthreads();");
        c_array = "sC";
    } else if (vc.c_source == CSource::Registers) {
        w.line("// C held in registers for the whole kernel");
        for (int m = 0; m < M; ++m)
            for (int j = 0; j < rpt; ++j)
                for (const auto& s : load_lines("const double ", "c" + str(m) + "_" + str(j), "C",
                                                str(m) + " * " + str(N) + " + " + col_index(j), cplx)) {
                    w.line(s);
                    ++meta.load_statements;
                }
    }
    w.line("if (!active) return;");
    w.line();

    auto c_value = [&](int m, int j) {
        return vc.c_source == CSource::Registers ? "c" + str(m) + "_" + str(j) : "c" + str(j);
    };

    // One loop trip over `rows` consecutive rows starting at `row0`; A values come from `a_prefix`.
    auto emit_body = [&](int rows, const std::string& row0, const std::string& a_prefix, bool load_a) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < rpt; ++j)
                for (const auto& name : parts("r" + str(i) + "_" + str(j), cplx)) {
                    w.line("double " + name + " = 0.0;");
                    ++meta.accumulators;
                }
        for (int m = 0; m < M; ++m) {
            if (vc.c_source != CSource::Registers)
                for (int j = 0; j < rpt; ++j) {
                    const auto idx = str(m) + " * " + str(N) + " + " + col_index(j);
                    const auto src = vc.c_source == CSource::GlobalCached ? "__ldg(&C[" : c_array + "[";
                    const auto end = vc.c_source == CSource::GlobalCached ? "])" : "]";
                    if (!cplx) {
                        w.line("const double c" + str(j) + " = " + src + idx + end + ";");
                    } else {
                        w.line("const double c" + str(j) + "_re = " + src + "2 * (" + idx + ")" + end + ";");
                        w.line("const double c" + str(j) + "_im = " + src + "2 * (" + idx + ") + 1" + end + ";");
                    }
                    if (vc.c_source == CSource::GlobalCached) meta.load_statements += cplx ? 2 : 1;
                }
            for (int i = 0; i < rows; ++i) {
                const auto a = a_prefix + str(i) + "_" + str(m);
                if (load_a)
                    for (const auto& s : load_lines("const double ", a, "A", "(" + row0 + " + " + str(i) + ") * " + str(M) + " + " + str(m), cplx)) {
                        w.line(s);
                        ++meta.load_statements;
                    }
                for (int j = 0; j < rpt; ++j)
                    for (const auto& s : fma_lines("r" + str(i) + "_" + str(j), a, c_value(m, j), cplx)) {
                        w.line(s);
                        ++meta.fma_statements;
                    }
            }
        }
        for (int i = 0; i < rows; ++i) {
            w.line("// row " + row0 + " + " + str(i));
            for (int j = 0; j < rpt; ++j) {
                const auto idx = "(" + row0 + " + " + str(i) + ") * " + str(N) + " + n" + str(j);
                std::string stmt;
                const auto names = parts("r" + str(i) + "_" + str(j), cplx);
                if (!cplx)
                    stmt = "B[" + idx + "] = " + names[0] + ";";
                else
                    stmt = "B[2 * (" + idx + ")] = " + names[0] + "; B[2 * (" + idx + ") + 1] = " + names[1] + ";";
                w.line(guarded_j.count(j) ? "if (n" + str(j) + " < " + str(N) + ") { " + stmt + " }" : stmt);
            }
        }
    };

    w.line("long long k = group * " + str(U) + ";");
    w.line("const long long stride = groups * " + str(U) + ";");
    if (lf) {
        w.line("// leap frog: A values of the next trip are loaded while this one computes");
        w.line("const long long kp = max(min(k, K - " + str(U) + "), 0LL);");
        for (int i = 0; i < U; ++i)
            for (int m = 0; m < M; ++m)
                for (const auto& s : load_lines("double ", "a" + str(i) + "_" + str(m), "A",
                                                "min(kp + " + str(i) + ", K - 1) * " + str(M) + " + " + str(m), cplx)) {
                    w.line(s);
                    ++meta.load_statements;
                }
        w.open("for (; k + " + str(U) + " <= K; k += stride)");
        w.line("const long long kn = min(k + stride, K - " + str(U) + ");");
        for (int i = 0; i < U; ++i)
            for (int m = 0; m < M; ++m)
                for (const auto& s : load_lines("const double ", "na" + str(i) + "_" + str(m), "A",
                                                "(kn + " + str(i) + ") * " + str(M) + " + " + str(m), cplx)) {
                    w.line(s);
                    ++meta.load_statements;
                }
        emit_body(U, "k", "a", false);
        for (int i = 0; i < U; ++i)
            for (int m = 0; m < M; ++m)
                for (const auto& name : parts("a" + str(i) + "_" + str(m), cplx)) w.line(name + " = n" + name + ";");
        w.close();
    } else {
        w.open("for (; k + " + str(U) + " <= K; k += stride)");
        emit_body(U, "k", "a", true);
        w.close();
    }
    if (U > 1) {
        w.line("// remainder rows of this group");
        w.line("const long long kend = min(k + " + str(U) + ", K);");
        w.open("for (long long kr = k; kr < kend; ++kr)");
        emit_body(1, "kr", "t", true);
        w.close();
    }
    w.close();

    k.source = w.str();
    meta.guard_count = static_cast<int>(guarded.size());
    meta.uses_shared_memory = vc.c_source == CSource::SharedMemory;
    meta.leapfrog = lf;
    meta.unroll = U;
    meta.register_estimate = vc.register_estimate;
    k.launch = {vc.grid_blocks, vc.config.block_size, meta.uses_shared_memory ? static_cast<int>(c_count * 8) : 0};
    return k;
}

}  // namespace

std::string config_hash(const ValidatedConfig& vc) {
    const auto text = canonical(vc);
    return hex64(fnv1a(text.data(), text.size())).substr(0, 8);
}

std::string kernel_name(const ValidatedConfig& vc) {
    return to_string(vc.op()) + "_" + scalar_code(vc.scalar) + "_m" + str(vc.shape.m) + "_n" + str(vc.shape.n) + "_" +
           config_hash(vc);
}

GeneratedKernel generate_kernel(const ValidatedConfig& vc) {
    return vc.op() == Operation::Tsmttsm ? generate_tsmttsm(vc) : generate_tsmm(vc);
}

ReductionFragment generate_reduction(const ValidatedConfig& vc) {
    if (vc.op() != Operation::Tsmttsm) throw ValidationError("TSMM has no global reduction");
    const TsmttsmLayout L(vc);
    SourceWriter w;
    ReductionFragment frag;
    emit_tsmttsm_reduction(w, vc, L, frag);
    frag.source = w.str();
    return frag;
}

void HarnessBundle::write_to(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& f : files) {
        std::ofstream out(dir / f.name, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir / f.name).string());
        out << f.content;
    }
}

HarnessBundle generate_harness(const ValidatedConfig& vc, std::int64_t k_rows, std::uint64_t seed) {
    const auto kernel = generate_kernel(vc);
    const auto& name = kernel.kernel_name;
    const bool tsmttsm = vc.op() == Operation::Tsmttsm;
    const bool cplx = vc.scalar == ScalarKind::ComplexF64;
    const std::int64_t M = vc.shape.m, N = vc.shape.n;
    const int width = cplx ? 2 : 1;

    SourceWriter d;
    d.line("// driver for " + name + "; prints RESULT gflops=<decimal> checksum=<16 hex digits>");
    d.line("#include <cstdint>");
    d.line("#include <cstdio>");
    d.line("#include <cstdlib>");
    d.line("#include <cstring>");
    d.line("#include <vector>");
    d.line("#include <cuda_runtime.h>");
    d.line();
    d.line("#include \"" + name + ".cu\"");
    d.line();
    d.line("#define CHECK(call) do { cudaError_t e_ = (call); if (e_ != cudaSuccess) { \\");
    d.line("    std::fprintf(stderr, \"%s: %s\\n\", #call, cudaGetErrorString(e_)); std::exit(2); } } while (0)");
    d.line();
    d.open("static double seeded_value(std::uint64_t seed, std::uint64_t index)");
    d.line("std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);");
    d.line("z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;");
    d.line("z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;");
    d.line("z ^= z >> 31;");
    d.line("return (double)(z >> 11) * 0x1.0p-53 * 2.0 - 1.0;");
    d.close();
    d.line();
    d.open("static std::uint64_t fnv1a(const std::vector<double>& v)");
    d.line("std::uint64_t h = 0xcbf29ce484222325ULL;");
    d.line("const unsigned char* p = reinterpret_cast<const unsigned char*>(v.data());");
    d.line("for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) { h ^= p[i]; h *= 0x100000001b3ULL; }");
    d.line("return h;");
    d.close();
    d.line();
    d.open("int main(int argc, char** argv)");
    d.line("const long long K = argc > 1 ? std::atoll(argv[1]) : " + str(k_rows) + "LL;");
    d.line("const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : " + std::to_string(seed) + "ULL;");
    d.line("const int reps = argc > 3 ? std::atoi(argv[3]) : 10;");
    d.line("const std::size_t a_len = (std::size_t)K * " + str(M * width) + ";");
    d.line("const std::size_t x_len = (std::size_t)" + (tsmttsm ? "K * " + str(N * width) : str(M * N * width)) + ";");
    d.line("const std::size_t r_len = (std::size_t)" + (tsmttsm ? str(M * N * width) : "K * " + str(N * width)) + ";");
    d.line("std::vector<double> a(a_len), x(x_len), r(r_len);");
    d.line("for (std::size_t i = 0; i < a_len; ++i) a[i] = seeded_value(seed, i);");
    d.line("for (std::size_t i = 0; i < x_len; ++i) x[i] = seeded_value(seed + 1, i);");
    d.line("double *da, *dx, *dr;");
    d.line("CHECK(cudaMalloc(&da, a_len * sizeof(double)));");
    d.line("CHECK(cudaMalloc(&dx, x_len * sizeof(double)));");
    d.line("CHECK(cudaMalloc(&dr, r_len * sizeof(double)));");
    d.line("CHECK(cudaMemcpy(da, a.data(), a_len * sizeof(double), cudaMemcpyHostToDevice));");
    d.line("CHECK(cudaMemcpy(dx, x.data(), x_len * sizeof(double), cudaMemcpyHostToDevice));");
    d.line("const dim3 grid(" + str(kernel.launch.grid_blocks) + "), block(" + str(kernel.launch.block_size) + ");");
    d.line("const int shared_bytes = " + str(kernel.launch.shared_bytes) + ";");
    d.line("if (shared_bytes > 48 * 1024) CHECK(cudaFuncSetAttribute(" + name +
           ", cudaFuncAttributeMaxDynamicSharedMemorySize, shared_bytes));");
    d.open("auto launch = [&]()");
    if (tsmttsm) d.line("CHECK(cudaMemsetAsync(dr, 0, r_len * sizeof(double)));");
    d.line(name + "<<<grid, block, shared_bytes>>>(da, dx, dr, K);");
    d.close(";");
    d.line("launch();");
    d.line("CHECK(cudaDeviceSynchronize());");
    d.line("cudaEvent_t start, stop;");
    d.line("CHECK(cudaEventCreate(&start));");
    d.line("CHECK(cudaEventCreate(&stop));");
    d.line("CHECK(cudaEventRecord(start));");
    d.line("for (int i = 0; i < reps; ++i) launch();");
    d.line("CHECK(cudaEventRecord(stop));");
    d.line("CHECK(cudaEventSynchronize(stop));");
    d.line("float ms = 0.0f;");
    d.line("CHECK(cudaEventElapsedTime(&ms, start, stop));");
    d.line("launch();");
    d.line("CHECK(cudaMemcpy(r.data(), dr, r_len * sizeof(double), cudaMemcpyDeviceToHost));");
    d.line("const double flops = " + str(flop_factor(vc.scalar)) + ".0 * " + str(M * N) + ".0 * (double)K;");
    d.line("const double gflops = flops * reps / (ms * 1e-3) * 1e-9;");
    d.line("std::printf(\"RESULT gflops=%.3f checksum=%016llx\\n\", gflops, (unsigned long long)fnv1a(r));");
    d.line("cudaFree(da); cudaFree(dx); cudaFree(dr);");
    d.line("return 0;");
    d.close();

    std::ostringstream build;
    build << "kernel " << name << "\n"
          << "grid " << kernel.launch.grid_blocks << " x " << kernel.launch.block_size << ", dynamic shared bytes "
          << kernel.launch.shared_bytes << "\n"
          << "K = " << k_rows << "\n"
          << "seed = " << seed << "\n"
          << "build: nvcc -O3 -arch=sm_70 -o " << name << " " << name << "_driver.cu\n"
          << "run:   ./" << name << " " << k_rows << " " << seed << "\n";

    HarnessBundle bundle;
    bundle.kernel_name = name;
    bundle.files = {{name + ".cu", kernel.source}, {name + "_driver.cu", d.str()}, {name + "_build.txt", build.str()}};
    return bundle;
}

}  // namespace tskgen
