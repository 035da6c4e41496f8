#pragma once

#include <initializer_list>

#include "doctest.h"
#include "macscale/matrix.hpp"

namespace testing {

inline macscale::PhaseMatrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  return macscale::PhaseMatrix(rows);
}

inline void check_close(const macscale::PhaseMatrix& got, const macscale::PhaseMatrix& want, double tol) {
  REQUIRE(got.rows() == want.rows());
  REQUIRE(got.cols() == want.cols());
  const double e = macscale::max_abs_diff(got, want);
  CAPTURE(e);
  CHECK(e <= tol);
}

}  // namespace testing
