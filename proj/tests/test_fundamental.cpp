#include <cmath>

#include "doctest.h"
#include "macscale/catalog.hpp"
#include "macscale/fundamental.hpp"
#include "macscale/oracle.hpp"
#include "support.hpp"

using namespace macscale;
using testing::check_close;
using testing::mat;

TEST_SUITE("fundamental") {

TEST_CASE("scalar G closed forms") {
  CHECK(solve_G(catalog::scalar_walk(0.4, 0.6)).result(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(solve_G(catalog::scalar_walk(0.6, 0.4)).result(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  const double g = (1.0 - std::sqrt(0.19)) / 0.9;
  CHECK(solve_G(catalog::scalar_walk(0.5, 0.5, 0.9)).result(0, 0) == doctest::Approx(g).epsilon(1e-12));
}

TEST_CASE("fair walk G reaches one despite sublinear convergence") {
  const SolveReport r = solve_G(catalog::scalar_walk(0.5, 0.5));
  CHECK(std::fabs(r.result(0, 0) - 1.0) < 1e-9);
}

TEST_CASE("MODEL-A G is stochastic and matches the dense oracle") {
  const SolveReport r = solve_G(catalog::model_a());
  // Dense fixed point in numpy, 2e5 iterations.
  check_close(r.result, mat({{0.7227294655744358, 0.27727053442556393}, {0.5073187523786995, 0.4926812476213003}}), 1e-13);
  for (double s : row_sums(r.result)) CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.residual < 1e-13);
}

TEST_CASE("killed MODEL-A G matches a deep strip solve") {
  // numpy dense strip on [-400, 1), kill 0.95
  check_close(solve_G(catalog::model_a(0.95)).result,
              mat({{0.59370412278701712, 0.21185742714700675}, {0.39009423982449626, 0.41546731010952748}}), 1e-12);
}

TEST_CASE("occupation L") {
  CHECK(occupation_L(catalog::scalar_walk(0.6, 0.4))(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
  // numpy: expected visits to level 0 on a killed two-sided strip [-300, 300]
  check_close(occupation_L(catalog::model_a(0.9)),
              mat({{1.7363251356421581, 0.61271775096104708}, {0.649897964158626, 1.6991449224445792}}), 1e-12);
}

TEST_CASE("occupation L(n) and hitting_down in the scalar case") {
  const MacModel m = catalog::scalar_walk(0.6, 0.4);
  CHECK(occupation_Ln(m, 1)(0, 0) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(hitting_down(m, 1)(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(hitting_down(m, 3)(0, 0) == doctest::Approx(8.0 / 27.0).epsilon(1e-12));
  check_close(hitting_down(m, 0), PhaseMatrix::identity(1), 0.0);
}

TEST_CASE("hitting_down agrees with a first-visit strip solve") {
  const MacModel m = catalog::model_a();
  for (int n = 1; n <= 4; ++n) check_close(hitting_down(m, n), solve_first_visit(m, -n, -n - 10, 400), 1e-10);
}

TEST_CASE("oscillating unkilled models have no finite L") {
  CHECK_THROWS_AS(occupation_L(catalog::scalar_walk(0.5, 0.5)), NumericalError);
  CHECK_THROWS_AS(hitting_down(catalog::scalar_walk(0.5, 0.5), 1), NumericalError);
  CHECK_NOTHROW(occupation_L(catalog::scalar_walk(0.5, 0.5, 0.99)));
}

TEST_CASE("G of random models satisfies its defining equation") {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const MacModel m = catalog::random_model(5, k, 4, 3, catalog::DriftBias::Mixed, k % 2 ? 0.95 : 1.0);
    const PhaseMatrix g = solve_G(m).result;
    PhaseMatrix rhs = m.kill_v * m.a_up;
    PhaseMatrix gp = g;
    for (const auto& b : m.a_down) {
      rhs += m.kill_v * (b * gp);
      gp = gp * g;
    }
    check_close(rhs, g, 1e-13);
  }
}

}  // TEST_SUITE
