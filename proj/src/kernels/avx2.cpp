#include "macscale/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

#include <cmath>

namespace macscale::kernels {
namespace {

// Same loop order as the scalar path, four columns per step. Separate
// multiply and add keep rounding identical to the reference.
__attribute__((target("avx2"))) void gemm_acc_avx2(
    std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
    const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * ldb;
      const __m256d va = _mm256_set1_pd(aip);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(bp + j));
        _mm256_storeu_pd(ci + j, _mm256_add_pd(_mm256_loadu_pd(ci + j), prod));
      }
      for (; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

__attribute__((target("avx2"))) void axpy_avx2(std::size_t n, double alpha,
                                               const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2"))) double max_abs_diff_avx2(std::size_t n, const double* x,
                                                         const double* y) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  __m256d nan_seen = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    d = _mm256_andnot_pd(sign, d);
    nan_seen = _mm256_or_pd(nan_seen, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    acc = _mm256_max_pd(acc, d);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double m = lanes[0];
  for (int l = 1; l < 4; ++l) m = lanes[l] > m ? lanes[l] : m;
  if (_mm256_movemask_pd(nan_seen)) m = std::nan("");
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > m || d != d) m = d;
  }
  return m;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{Isa::Avx2, gemm_acc_avx2, axpy_avx2, max_abs_diff_avx2};
  return __builtin_cpu_supports("avx2") ? &t : nullptr;
}

}  // namespace macscale::kernels

#else

namespace macscale::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace macscale::kernels

#endif
