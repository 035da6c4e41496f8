#pragma once

// Extended precision scalar used inside the scale and exit computations.
// 113-bit mantissa on both x86-64 (__float128) and aarch64 (long double).

#include <cmath>

namespace macscale {

#if defined(__SIZEOF_FLOAT128__) && !defined(__aarch64__)
using quad = __float128;
#else
using quad = long double;
#endif

static_assert(sizeof(quad) == 16, "a 128-bit floating type is required");

inline quad qabs(quad x) { return x < 0 ? -x : x; }

inline double qabs(double x) { return std::fabs(x); }

template <class T>
T ipow(T base, int n) {
  T r = 1;
  while (n > 0) {
    if (n & 1) r *= base;
    base *= base;
    n >>= 1;
  }
  return r;
}

inline bool is_finite(quad x) {
  const quad big = static_cast<quad>(1e300) * static_cast<quad>(1e300);
  return x == x && qabs(x) < big;
}

}  // namespace macscale
