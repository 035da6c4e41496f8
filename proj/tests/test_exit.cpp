#include <cmath>

#include "doctest.h"
#include "macscale/catalog.hpp"
#include "macscale/exit.hpp"
#include "macscale/fundamental.hpp"
#include "macscale/oracle.hpp"
#include "support.hpp"

using namespace macscale;
using testing::check_close;
using testing::mat;

TEST_SUITE("exit") {

TEST_CASE("scalar gambler's ruin values") {
  const ScaleTable up(catalog::scalar_walk(0.6, 0.4), 8);
  CHECK(two_sided_up(up, 2, 2)(0, 0) == doctest::Approx(9.0 / 13.0).epsilon(1e-12));
  CHECK(one_sided_down(up, 1, 1.0)(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const ScaleTable down(catalog::scalar_walk(0.4, 0.6), 8);
  CHECK(two_sided_down(down, 1, 1, 1.0)(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(one_sided_down(down, 1, 1.0)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("b = 0 exits downward immediately") {
  const ScaleTable t(catalog::model_a(), 4);
  check_close(two_sided_up(t, 3, 0), PhaseMatrix(2, 2), 0.0);
}

TEST_CASE("MODEL-A values from an independent dense strip solve") {
  // numpy dense solves of the killed-free strip chains.
  const ScaleTable t(catalog::model_a(), 8);
  check_close(two_sided_up(t, 2, 2),
              mat({{0.45051525808978238, 0.22062568150753309}, {0.40413844649557951, 0.26700249310173596}}), 1e-12);
  check_close(two_sided_down(t, 2, 2, 0.8),
              mat({{0.090167923456145493, 0.12030187520157268}, {0.082747633601073012, 0.12772216505664513}}), 1e-12);
  check_close(one_sided_reflected_up(t, 2, 2, 0.8),
              mat({{0.60720741274889845, 0.30670202310765182}, {0.56080391738331437, 0.35310551847323574}}), 1e-12);
  check_close(two_sided_reflection_pgf(t, 2, -1, 0.8),
              mat({{0.57970953046463458, 0.29278396410141461}, {0.53323361981056638, 0.33925987475548286}}), 1e-12);
  check_close(regulator_joint_transform(t, 2, -1, 0.8, 0.9),
              mat({{0.23352372162712715, 0.32448339581059571}, {0.22419780663526456, 0.33380931080245824}}), 1e-12);
  check_close(one_sided_down(t, 1, 0.9),
              mat({{0.31420570036080064, 0.31579429963919947}, {0.21727087942271919, 0.41272912057728089}}), 1e-12);
}

TEST_CASE("f_star is the width-d reflection pgf started at the top") {
  const ScaleTable t(catalog::model_a(0.97), 8);
  for (int d = 0; d <= 5; ++d)
    for (double z : {0.3, 0.8, 1.0}) check_close(f_star(t, d + 1, z), two_sided_reflection_pgf(t, d, 0, z), 1e-12);
}

TEST_CASE("f_star identity and its z -> 0 limit") {
  const MacModel m = catalog::random_model(17, 2, 3, 2, catalog::DriftBias::Mixed);
  const ScaleTable t(m, 8);
  const PhaseMatrix id = PhaseMatrix::identity(3);
  for (int w = 1; w <= 6; ++w) {
    for (double z : {0.25, 0.6, 1.0}) {
      PhaseMatrix br = t.w(w) * (id - eval_F(m, z));
      br = id + z * right_divide(br, z_matrix(t, z, w - 1));
      check_close(f_star(t, w, z) * br, z * id, 1e-10);
    }
    check_close(f_star(t, w, 1e-8), right_divide(t.w(w), t.w(w + 1)), 1e-6);
  }
}

TEST_CASE("killed queries through table_for") {
  const ScaleTable t(catalog::model_a(), 6);
  const ScaleTable k = table_for(t, 0.9);
  CHECK(k.kill_v() == 0.9);
  StripSpec s;
  s.lower = -3;
  s.upper = 2;
  check_close(two_sided_up(k, 2, 3), solve_strip(catalog::model_a(0.9), s), 1e-12);
}

TEST_CASE("domain errors") {
  const ScaleTable t(catalog::model_a(), 4);
  CHECK_THROWS_AS(two_sided_down(t, 1, 1, 0.0), DomainError);
  CHECK_THROWS_AS(two_sided_down(t, 1, 1, 1.5), DomainError);
  CHECK_THROWS_AS(two_sided_up(t, 4, 4), DomainError);
  CHECK_THROWS_AS(two_sided_reflection_pgf(t, 2, 1, 0.5), DomainError);
  CHECK_THROWS_AS(one_sided_down(ScaleTable(catalog::scalar_walk(0.5, 0.5), 4), 1, 1.0), NumericalError);
}

TEST_CASE("first increase transform") {
  // Scalar check: v (1 - v F0)^-1 (Fz - F0) with F0 = A0, Fz = A0 + z A-1.
  const PhaseMatrix f0 = mat({{0.2}});
  const PhaseMatrix fz = mat({{0.2 + 0.5 * 0.3}});
  const double want = 0.9 * (0.5 * 0.3) / (1.0 - 0.9 * 0.2);
  CHECK(first_increase_transform(f0, fz, 0.9)(0, 0) == doctest::Approx(want).epsilon(1e-14));
}

}  // TEST_SUITE
