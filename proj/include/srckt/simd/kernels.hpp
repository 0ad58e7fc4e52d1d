#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision kernels used by every model inner loop. Each level
// provides the same table; the scalar table is the reference the vector
// variants are checked against.
namespace srckt::simd {

enum class Level { Scalar, Avx2, Neon };

std::string_view to_string(Level level);

struct KernelTable {
    Level level;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // C[m x n] (+)= A[m x k] * B[k x n]
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate);
    // C[m x n] (+)= A[m x k] * B[n x k]^T
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate);
    // C[m x n] (+)= A[k x m]^T * B[k x n]
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate);
};

bool supported(Level level);
Level detect_best();

// The active table. Chosen once from CPU features (override with the
// SRCKT_SIMD environment variable: "scalar", "avx2", "neon").
const KernelTable& kernels();
const KernelTable& kernels(Level level);

// Switch the active level for the whole process. Throws ConfigError if the
// CPU or build lacks the level.
void set_level(Level level);
Level active_level();

namespace detail {
extern const KernelTable scalar_table;
#if defined(SRCKT_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(SRCKT_HAVE_NEON)
extern const KernelTable neon_table;
#endif
} // namespace detail

} // namespace srckt::simd
