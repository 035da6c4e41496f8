#include "macscale/fundamental.hpp"

#include <cmath>
#include <string>

#include "macscale/scale.hpp"

namespace macscale {
namespace detail {
namespace {

// Above this phase count the N^2 x N^2 Newton system is too costly in quad.
constexpr std::size_t kNewtonMaxPhases = 12;
constexpr long kQuadFixedPointCap = 20000;
const quad kQuadTarget = static_cast<quad>(1e-30);

template <class T>
Matrix<T> horner(const std::vector<Matrix<T>>& c, const Matrix<T>& x) {
  Matrix<T> s = c.back();
  for (std::size_t k = c.size() - 1; k-- > 0;) {
    Matrix<T> t = c[k];
    mul_acc(s, x, t);
    s = std::move(t);
  }
  return s;
}

QMatrix defect(const std::vector<QMatrix>& c, const QMatrix& x) { return horner(c, x) - x; }

// Solves J(Y) = -R where J(Y) = sum_k C_k sum_j X^j Y X^{k-1-j} - Y.
bool newton_step(const std::vector<QMatrix>& c, const QMatrix& x, const QMatrix& r, QMatrix& y) {
  const std::size_t n = x.rows();
  const std::size_t nn = n * n;
  std::vector<QMatrix> xp{QMatrix::identity(n)};
  for (std::size_t k = 1; k < c.size(); ++k) xp.push_back(xp.back() * x);

  // Column-major vec: vec(A Y B) = (B^T kron A) vec(Y).
  QMatrix jac(nn, nn);
  for (std::size_t k = 1; k < c.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      const QMatrix a = c[k] * xp[j];
      const QMatrix& b = xp[k - 1 - j];
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
          const quad bqp = b(q, p);  // (B^T)(p, q)
          if (bqp == 0) continue;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < n; ++l) jac(p * n + i, q * n + l) += bqp * a(i, l);
        }
    }
  }
  for (std::size_t i = 0; i < nn; ++i) jac(i, i) -= 1;

  QMatrix rhs(nn, 1);
  for (std::size_t col = 0; col < n; ++col)
    for (std::size_t i = 0; i < n; ++i) rhs(col * n + i, 0) = -r(i, col);
  const Lu<quad> lu(jac);
  if (lu.singular()) return false;
  const QMatrix sol = lu.solve(rhs);
  y = QMatrix(n, n);
  for (std::size_t col = 0; col < n; ++col)
    for (std::size_t i = 0; i < n; ++i) y(i, col) = sol(col * n + i, 0);
  return all_finite(y);
}

}  // namespace

MinimalSolution minimal_solution(const std::vector<QMatrix>& coeffs, const SolveOptions& opts) {
  if (coeffs.empty()) throw DomainError("minimal_solution: no coefficients");
  const std::size_t n = coeffs[0].rows();
  MinimalSolution out;

  // Stage 1: monotone fixed point from zero in double.
  std::vector<PhaseMatrix> cd;
  for (const auto& c : coeffs) cd.push_back(cast<double>(c));
  PhaseMatrix x(n, n);
  double prev_step = 0.0;
  long slow = 0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    PhaseMatrix nx = horner(cd, x);
    for (std::size_t i = 0; i < nx.size(); ++i) {
      const double inc = nx.data()[i] - x.data()[i];
      if (inc < -1e-14 * std::max(1.0, std::fabs(x.data()[i])))
        throw NumericalError("fixed-point iterates are not monotone");
      if (!std::isfinite(nx.data()[i])) throw NumericalError("fixed-point iterate is not finite");
    }
    const double step = max_abs_diff(nx, x);
    x = std::move(nx);
    out.fixed_point_iterations = it;
    if (step < opts.tol) break;
    // Contraction close to one: hand over to Newton instead of crawling.
    slow = (prev_step > 0.0 && step > 0.999 * prev_step) ? slow + 1 : 0;
    prev_step = step;
    if (slow > 2000 && n <= kNewtonMaxPhases) break;
  }

  // Stage 2: polish in quad. Newton from a point below the minimal solution
  // stays below it and increases monotonically.
  QMatrix xq = cast<quad>(x);
  QMatrix r = defect(coeffs, xq);
  quad rn = max_abs(r);
  if (n <= kNewtonMaxPhases) {
    for (int it = 0; it < 200 && rn > kQuadTarget; ++it) {
      QMatrix y;
      if (!newton_step(coeffs, xq, r, y)) break;
      const quad scale = std::max<quad>(1, max_abs(xq));
      bool monotone = true;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y.data()[i] < -static_cast<quad>(1e-20) * scale) monotone = false;
      QMatrix cand = xq + y;
      QMatrix rc = defect(coeffs, cand);
      const quad rcn = max_abs(rc);
      if (!monotone || !(rcn < rn)) break;
      xq = std::move(cand);
      r = std::move(rc);
      rn = rcn;
      ++out.polish_iterations;
    }
  }
  for (long it = 0; it < kQuadFixedPointCap && rn > kQuadTarget; ++it) {
    QMatrix cand = horner(coeffs, xq);
    QMatrix rc = defect(coeffs, cand);
    const quad rcn = max_abs(rc);
    if (!(rcn < rn)) break;
    xq = std::move(cand);
    rn = rcn;
    ++out.polish_iterations;
  }
  out.x = std::move(xq);
  out.residual = static_cast<double>(rn);
  return out;
}

std::vector<QMatrix> killed_blocks(const MacModel& model) {
  const quad v = static_cast<quad>(model.kill_v);
  std::vector<QMatrix> b;
  b.push_back(v * cast<quad>(model.a_up));
  for (const auto& a : model.a_down) b.push_back(v * cast<quad>(a));
  return b;
}

QMatrix solve_G_q(const MacModel& model, const SolveOptions& opts) {
  require_valid(model);
  const MinimalSolution s = minimal_solution(killed_blocks(model), opts);
  if (!(s.residual <= opts.tol))
    throw NumericalError("solve_G did not converge (residual " + std::to_string(s.residual) + ")");
  return s.x;
}

void require_finite_occupation(const MacModel& model, const char* what) {
  if (model.kill_v < 1.0) return;
  if (drift(model).classification == DriftClass::Oscillates)
    throw NumericalError(std::string(what) + ": L infinite (null-recurrent level process)");
}

Fundamentals fundamentals_q(const MacModel& model, double tol) {
  require_finite_occupation(model, "occupation_L");
  SolveOptions opts;
  opts.tol = tol;
  Fundamentals f;
  f.G = solve_G_q(model, opts);
  const std::vector<QMatrix> b = killed_blocks(model);
  const std::size_t n = f.G.rows();
  const int m_max = model.max_down_jump();

  // Group levels into blocks of m_max so the chain is skip-free in both
  // directions; a path from above can jump past level 0 but not past block 0.
  // Block state (r, i): level r in [0, m_max) within the block, phase i.
  const std::size_t nb = n * static_cast<std::size_t>(m_max);
  auto block_of = [&](int k) {
    QMatrix out(nb, nb);
    for (int r = 0; r < m_max; ++r)
      for (int s = 0; s < m_max; ++s) {
        const int jump = s + k * m_max - r;
        if (jump > 1 || jump < -m_max) continue;
        const QMatrix& a = b[static_cast<std::size_t>(1 - jump)];
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) out(r * n + i, s * n + j) = a(i, j);
      }
    return out;
  };
  const QMatrix up = block_of(1), stay = block_of(0), down = block_of(-1);

  // Phase law on first entry to the block below: X = down + stay X + up X^2.
  const MinimalSolution h = minimal_solution({down, stay, up}, opts);
  if (!(h.residual <= tol))
    throw NumericalError("occupation_L: return-matrix iteration did not converge (residual " +
                         std::to_string(h.residual) + ")");

  // Entry to the block above is always at its lowest level: from level r the
  // phase law is G^(m_max - r).
  QMatrix g_up(nb, nb);
  for (int r = 0; r < m_max; ++r) {
    const QMatrix gp = power(f.G, m_max - r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g_up(r * n + i, j) = gp(i, j);
  }

  // Returns to block 0, then expected visits within it; L is the level-0 corner.
  QMatrix pi = stay;
  mul_acc(up, h.x, pi);
  mul_acc(down, g_up, pi);
  const Lu<quad> blu(QMatrix::identity(nb) - pi);
  if (blu.singular()) throw NumericalError("occupation_L: I - Pi is singular");
  const QMatrix lb = blu.inverse();
  f.L = QMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) f.L(i, j) = lb(i, j);
  if (!all_finite(f.L)) throw NumericalError("occupation_L: non-finite result");
  return f;
}

}  // namespace detail

SolveReport solve_G(const MacModel& model, const SolveOptions& opts) {
  require_valid(model);
  const detail::MinimalSolution s = detail::minimal_solution(detail::killed_blocks(model), opts);
  if (!(s.residual <= opts.tol))
    throw NumericalError("solve_G did not converge after " +
                         std::to_string(s.fixed_point_iterations) + " iterations (residual " +
                         std::to_string(s.residual) + ")");
  return {cast<double>(s.x), s.fixed_point_iterations + s.polish_iterations, s.residual};
}

PhaseMatrix occupation_L(const MacModel& model, double tol) {
  return cast<double>(detail::fundamentals_q(model, tol).L);
}

PhaseMatrix occupation_Ln(const MacModel& model, int n) {
  if (n < 1) throw DomainError("occupation_Ln: n must be >= 1");
  const QMatrix g = detail::solve_G_q(model);
  const ScaleTable t(model, n);
  return cast<double>(power(g, n) * t.w_q(n));
}

PhaseMatrix hitting_down(const MacModel& model, int n) {
  if (n < 0) throw DomainError("hitting_down: n must be >= 0");
  const std::size_t np = static_cast<std::size_t>(model.n_phases);
  if (n == 0) return PhaseMatrix::identity(np);
  const detail::Fundamentals f = detail::fundamentals_q(model);
  const Lu<quad> glu(f.G);
  if (glu.singular()) throw NumericalError("hitting_down: G is singular (A1 not invertible)");
  QMatrix ginv_n = QMatrix::identity(np);
  for (int k = 0; k < n; ++k) ginv_n = glu.solve(ginv_n);
  const ScaleTable t(model, n);
  const QMatrix wl = right_divide(t.w_q(n), f.L);
  return cast<double>(ginv_n - wl);
}

}  // namespace macscale
