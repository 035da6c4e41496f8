#pragma once

#include <optional>

#include "macscale/scale.hpp"

namespace macscale {

// Lattice parameters of an exit/reflection query. v, when set, replaces the
// table's killing parameter (the table is rebuilt).
struct ExitQuery {
  int a = 1;
  int b = 1;
  int d = 0;
  int x = 0;
  double z = 1.0;
  std::optional<double> v;
};

// Same table when v is unset or equal to the table's kill_v, otherwise a rebuilt one.
ScaleTable table_for(const ScaleTable& table, std::optional<double> v);

// E(v^tau; tau_a^+ < tau_-b^-, J)
PhaseMatrix two_sided_up(const ScaleTable& t, int a, int b, Diagnostics* diag = nullptr);

// E(z^{R^-_{rho_0}}; J_{rho_0}) for the process reflected in [-d, 0], width = d + 1.
PhaseMatrix f_star(const ScaleTable& t, int width, double z, Diagnostics* diag = nullptr);

// Lower regulator transform at the first passage above a, reflected at -b.
PhaseMatrix one_sided_reflected_up(const ScaleTable& t, int a, int b, double z,
                                   Diagnostics* diag = nullptr);

// E(v^tau z^{-X_tau}; tau_-b^- < tau_a^+, J)
PhaseMatrix two_sided_down(const ScaleTable& t, int a, int b, double z, Diagnostics* diag = nullptr);

// E(v^tau z^{-X_tau}; tau_-b^- < inf, J)
PhaseMatrix one_sided_down(const ScaleTable& t, int b, double z, Diagnostics* diag = nullptr);

// E_x(z^{R^-_{rho_0}}; J_{rho_0}) for the two-sided reflection in [-d, 0].
PhaseMatrix two_sided_reflection_pgf(const ScaleTable& t, int d, int x, double z,
                                     Diagnostics* diag = nullptr);

// E_x(v^{R^+_tau} z^{R^-_tau}; J_tau), tau the first passage of the
// upper-reflected process below -(d+1). Here v marks the upper regulator;
// killing comes from the table.
PhaseMatrix regulator_joint_transform(const ScaleTable& t, int d, int x, double z, double v,
                                      Diagnostics* diag = nullptr);

// E(v^eta z^{X_eta - X_0}; J_eta), eta the first strict increase of a MAC
// with nonnegative jumps and generating matrix F(z) = E(z^{X_1}; J_1).
PhaseMatrix first_increase_transform(const PhaseMatrix& f0, const PhaseMatrix& fz, double v);

}  // namespace macscale
