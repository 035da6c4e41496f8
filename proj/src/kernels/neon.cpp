#include "macscale/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cmath>

namespace macscale::kernels {
namespace {

void gemm_acc_neon(std::size_t m, std::size_t n, std::size_t k, const double* a,
                   std::size_t lda, const double* b, std::size_t ldb, double* c,
                   std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p];
      if (aip == 0.0) continue;
      const double* bp = b + p * ldb;
      const float64x2_t va = vdupq_n_f64(aip);
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        float64x2_t prod = vmulq_f64(va, vld1q_f64(bp + j));
        vst1q_f64(ci + j, vaddq_f64(vld1q_f64(ci + j), prod));
      }
      for (; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void axpy_neon(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t prod = vmulq_f64(va, vld1q_f64(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double max_abs_diff_neon(std::size_t n, const double* x, const double* y) {
  // vmaxq_f64 propagates NaN, matching the scalar contract.
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vmaxq_f64(acc, vabsq_f64(vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i))));
  double m = vmaxvq_f64(acc);
  for (; i < n; ++i) {
    const double d = std::fabs(x[i] - y[i]);
    if (d > m || d != d) m = d;
  }
  return m;
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable t{Isa::Neon, gemm_acc_neon, axpy_neon, max_abs_diff_neon};
  return &t;
}

}  // namespace macscale::kernels

#else

namespace macscale::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace macscale::kernels

#endif
