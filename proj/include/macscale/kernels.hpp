#pragma once

// Dense double-precision inner loops with runtime ISA selection.
// Every variant performs the same operations in the same order (no FMA),
// so results are bit-identical across variants.

#include <cstddef>
#include <string>

namespace macscale::kernels {

enum class Isa { Scalar, Avx2, Neon };

// C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions.
using GemmAccFn = void (*)(std::size_t m, std::size_t n, std::size_t k,
                           const double* a, std::size_t lda, const double* b,
                           std::size_t ldb, double* c, std::size_t ldc);
// y += alpha * x
using AxpyFn = void (*)(std::size_t n, double alpha, const double* x, double* y);
using MaxAbsDiffFn = double (*)(std::size_t n, const double* x, const double* y);

struct KernelTable {
  Isa isa;
  GemmAccFn gemm_acc;
  AxpyFn axpy;
  MaxAbsDiffFn max_abs_diff;
};

const KernelTable& scalar_table();
// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Best table for this CPU; MACSCALE_ISA=scalar forces the reference path.
const KernelTable& active();

std::string isa_name(Isa isa);

inline void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a,
                     std::size_t lda, const double* b, std::size_t ldb, double* c,
                     std::size_t ldc) {
  active().gemm_acc(m, n, k, a, lda, b, ldb, c, ldc);
}

inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
  active().axpy(n, alpha, x, y);
}

inline double max_abs_diff(std::size_t n, const double* x, const double* y) {
  return active().max_abs_diff(n, x, y);
}

}  // namespace macscale::kernels
