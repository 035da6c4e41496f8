#pragma once

#include "macscale/model.hpp"

namespace macscale {

struct SolveOptions {
  double tol = 1e-13;
  long max_iter = 1000000;
};

struct SolveReport {
  PhaseMatrix result;
  long iterations = 0;   // fixed-point sweeps plus polishing steps
  double residual = 0;   // inf-norm of the fixed-point defect
};

// Minimal nonnegative solution of G = v * sum_{m=-1}^{M} A_{-m} G^{m+1}.
SolveReport solve_G(const MacModel& model, const SolveOptions& opts = {});

// Expected visits to level 0 over an infinite horizon (killed by kill_v).
PhaseMatrix occupation_L(const MacModel& model, double tol = 1e-13);

// Expected visits to level 0 before the level first reaches n: G^n W(n).
PhaseMatrix occupation_Ln(const MacModel& model, int n);

// E(v^tau; J_tau) for tau the first visit of level -n.
PhaseMatrix hitting_down(const MacModel& model, int n);

namespace detail {

// X = sum_k coeffs[k] X^k, minimal nonnegative solution. Double fixed point
// from zero (monotonicity asserted), then Newton or fixed-point polishing in quad.
struct MinimalSolution {
  QMatrix x;
  long fixed_point_iterations = 0;
  long polish_iterations = 0;
  double residual = 0;
};

MinimalSolution minimal_solution(const std::vector<QMatrix>& coeffs, const SolveOptions& opts);

// Killed blocks in quad: [vA1, vA0, vA-1, ..., vA-M].
std::vector<QMatrix> killed_blocks(const MacModel& model);

struct Fundamentals {
  QMatrix G;
  QMatrix L;
};

QMatrix solve_G_q(const MacModel& model, const SolveOptions& opts = {});
// Requires the L precondition (not unkilled and oscillating).
Fundamentals fundamentals_q(const MacModel& model, double tol = 1e-13);

void require_finite_occupation(const MacModel& model, const char* what);

}  // namespace detail
}  // namespace macscale
