#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "macscale/catalog.hpp"
#include "macscale/model.hpp"
#include "support.hpp"

using namespace macscale;

TEST_SUITE("model") {

TEST_CASE("MODEL-A stationary law and drift") {
  const MacModel m = catalog::model_a();
  CHECK(validate(m).ok);
  const auto pi = stationary(m);
  CHECK(pi[0] == doctest::Approx(7.0 / 13.0).epsilon(1e-14));
  CHECK(pi[1] == doctest::Approx(6.0 / 13.0).epsilon(1e-14));
  const DriftInfo d = drift(m);
  CHECK(d.kappa_prime_1 == doctest::Approx(-0.15).epsilon(1e-13));
  CHECK(d.classification == DriftClass::DriftsUp);
}

TEST_CASE("scalar walk drift classes") {
  CHECK(drift(catalog::scalar_walk(0.6, 0.4)).classification == DriftClass::DriftsUp);
  CHECK(drift(catalog::scalar_walk(0.4, 0.6)).classification == DriftClass::DriftsDown);
  CHECK(drift(catalog::scalar_walk(0.5, 0.5)).classification == DriftClass::Oscillates);
}

TEST_CASE("validation catches bad rows, signs and kill parameter") {
  MacModel m = catalog::model_a();
  m.a_up(0, 0) = 0.5;
  auto r = validate(m);
  CHECK_FALSE(r.ok);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].row == 0);

  m = catalog::model_a();
  m.a_down[0](1, 0) = -0.05;
  m.a_down[0](1, 1) = 0.2;
  r = validate(m);
  CHECK_FALSE(r.ok);
  CHECK(r.violations[0].rule == "negative entry");

  CHECK_FALSE(validate(catalog::model_a(0.0)).ok);
  CHECK_FALSE(validate(catalog::model_a(1.5)).ok);
  CHECK_THROWS_AS(require_valid(catalog::model_a(1.5)), ValidationError);

  m = catalog::model_a();
  m.a_up(1, 1) = std::nan("");
  CHECK_FALSE(validate(m).ok);
}

TEST_CASE("reducible phase chain is rejected by stationary") {
  MacModel m;
  m.n_phases = 2;
  m.a_up = testing::mat({{0.5, 0.0}, {0.0, 0.5}});
  m.a_down = {testing::mat({{0.0, 0.0}, {0.0, 0.0}}), testing::mat({{0.5, 0.0}, {0.0, 0.5}})};
  CHECK(validate(m).ok);
  CHECK_THROWS_AS(stationary(m), ValidationError);
}

TEST_CASE("eval_F at z = 1 is the killed transition matrix") {
  const MacModel m = catalog::model_a(0.9);
  testing::check_close(eval_F(m, 1.0), 0.9 * transition_matrix(m), 1e-15);
}

TEST_CASE("perron pair agrees with a dense eigen-solver") {
  for (std::uint64_t k = 0; k < 10; ++k) {
    const MacModel m = catalog::random_model(99, k, 3, 2, catalog::DriftBias::Mixed);
    for (double z : {0.3, 0.8, 1.0, 1.7}) {
      const SpectralData sd = perron(m, z);
      const PhaseMatrix f = eval_F(m, z);
      Eigen::MatrixXd e(3, 3);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) e(i, j) = f(i, j);
      Eigen::EigenSolver<Eigen::MatrixXd> es(e);
      double best = -1e300;
      for (int i = 0; i < 3; ++i) best = std::max(best, es.eigenvalues()[i].real());
      CHECK(sd.kappa == doctest::Approx(best).epsilon(1e-11));
      const auto pi = stationary(m);
      double ph = 0, wh = 0;
      for (int i = 0; i < 3; ++i) {
        ph += pi[i] * sd.right[i];
        wh += sd.left[i] * sd.right[i];
        CHECK(sd.right[i] > 0.0);
      }
      CHECK(ph == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(wh == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("perron at z = 1 of an unkilled model is one") {
  CHECK(perron(catalog::model_a(), 1.0).kappa == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE
