#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "macscale/oracle.hpp"

namespace macscale {
namespace {

// Banded I - Q with its right-hand side. Q is kept as exact triplets so the
// residual can be formed in quad: the diagonal 1 - q rounds in double, and on
// slow strips (expected exit times ~1e9 steps) that rounding alone moves the
// answer by 1e-7. Elimination needs no pivoting since I - Q is a nonsingular
// M-matrix when absorption is reachable.
class BandedSystem {
 public:
  BandedSystem(std::size_t n, std::size_t kl, std::size_t ku, std::size_t nrhs)
      : n_(n), kl_(kl), ku_(ku), w_(kl + ku + 1), band_(n * w_, 0.0), rhs_(n, nrhs) {
    for (std::size_t i = 0; i < n; ++i) at(i, i) = 1.0;
  }

  void add_q(std::size_t i, std::size_t c, quad p) {
    at(i, c) -= static_cast<double>(p);
    q_.push_back({i, c, p});
  }
  void add_rhs(std::size_t i, std::size_t j, quad v) { rhs_(i, j) += v; }

  PhaseMatrix solve() {
    factor();
    PhaseMatrix x = cast<double>(rhs_);
    substitute(x);
    for (int it = 0; it < kRefineSteps; ++it) {
      PhaseMatrix r = residual(x);
      if (max_abs(r) == 0.0) break;
      substitute(r);
      x += r;
      if (max_abs(r) <= 1e-17 * std::max(1.0, max_abs(x))) break;
    }
    return x;
  }

 private:
  static constexpr int kRefineSteps = 6;
  struct Entry {
    std::size_t row, col;
    quad p;
  };

  double& at(std::size_t i, std::size_t c) { return band_[i * w_ + (c + kl_ - i)]; }

  // In-place LU; multipliers are stored in the lower band.
  void factor() {
    for (std::size_t k = 0; k < n_; ++k) {
      const double piv = at(k, k);
      if (!(std::fabs(piv) > 1e-300)) throw NumericalError("strip system is singular");
      const std::size_t len = std::min(n_ - 1, k + ku_) - k;
      for (std::size_t i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) {
        double& aik = at(i, k);
        if (aik == 0.0) continue;
        aik /= piv;
        if (len) kernels::axpy(len, -aik, &at(k, k + 1), &at(i, k + 1));
      }
    }
  }

  void substitute(PhaseMatrix& x) {
    const std::size_t m = x.cols();
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = k + 1; i <= std::min(n_ - 1, k + kl_); ++i) {
        const double f = at(i, k);
        if (f != 0.0) kernels::axpy(m, -f, x.row(k), x.row(i));
      }
    for (std::size_t i = n_; i-- > 0;) {
      double* xi = x.row(i);
      for (std::size_t c = i + 1; c <= std::min(n_ - 1, i + ku_); ++c) {
        const double a = at(i, c);
        if (a != 0.0) kernels::axpy(m, -a, x.row(c), xi);
      }
      const double d = at(i, i);
      for (std::size_t j = 0; j < m; ++j) xi[j] /= d;
    }
  }

  // rhs - (I - Q) x, accumulated in quad.
  PhaseMatrix residual(const PhaseMatrix& x) const {
    const std::size_t m = x.cols();
    QMatrix r(n_, m);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m; ++j) r(i, j) = rhs_(i, j) - static_cast<quad>(x(i, j));
    for (const Entry& e : q_)
      for (std::size_t j = 0; j < m; ++j) r(e.row, j) += e.p * static_cast<quad>(x(e.col, j));
    return cast<double>(r);
  }

  std::size_t n_, kl_, ku_, w_;
  std::vector<double> band_;
  QMatrix rhs_;
  std::vector<Entry> q_;
};

void check_state_count(std::int64_t levels, const MacModel& model) {
  const std::int64_t states = levels * model.n_phases;
  if (levels < 1) throw DomainError("strip has no transient levels");
  if ((levels + model.max_down_jump()) * model.n_phases > kStripStateGuard || states > kStripStateGuard)
    throw DomainError("strip state count exceeds guard (" + std::to_string(kStripStateGuard) + ")");
}

}  // namespace

PhaseMatrix solve_strip(const MacModel& model, const StripSpec& s) {
  require_valid(model);
  const bool lower_refl = s.lower_barrier == Barrier::Reflecting;
  const bool upper_refl = s.upper_barrier == Barrier::Reflecting;
  if (s.lower >= s.upper) throw DomainError("strip needs lower < upper");
  if (lower_refl && upper_refl) throw DomainError("strip needs at least one absorbing barrier");
  const bool down_pay = s.payoff == Payoff::ZPowerNegX || s.payoff == Payoff::Joint;
  const bool timed = s.payoff == Payoff::VPowerTime || s.payoff == Payoff::Joint;
  if (down_pay && lower_refl) throw DomainError("payoff needs an absorbing lower barrier");
  if (s.payoff == Payoff::Indicator && upper_refl) throw DomainError("Indicator needs an absorbing upper barrier");
  if (timed && upper_refl) throw DomainError("v cannot mark both time and the upper regulator");
  if (!(s.z > 0.0) || !(s.v > 0.0)) throw DomainError("strip weights must be positive");

  const int lo = lower_refl ? s.lower : s.lower + 1;
  const int hi = upper_refl ? s.upper : s.upper - 1;
  if (s.start < lo || s.start > hi) throw DomainError("strip start level is not a transient level");
  const std::int64_t levels = static_cast<std::int64_t>(hi) - lo + 1;
  check_state_count(levels, model);

  const std::size_t n = static_cast<std::size_t>(model.n_phases);
  const int m_max = model.max_down_jump();
  const std::size_t states = static_cast<std::size_t>(levels) * n;
  BandedSystem sys(states, (static_cast<std::size_t>(m_max) + 1) * n, 2 * n, n);

  const quad zq = static_cast<quad>(s.z), vq = static_cast<quad>(s.v);
  const quad step = static_cast<quad>(model.kill_v) * (timed ? vq : quad(1));
  for (int l = lo; l <= hi; ++l) {
    const std::size_t base = static_cast<std::size_t>(l - lo) * n;
    for (int jump = 1; jump >= -m_max; --jump) {
      const PhaseMatrix& blk = model.block(jump);
      int t = l + jump;
      quad w = step;
      if (upper_refl && t > s.upper) {
        w *= ipow(vq, t - s.upper);
        t = s.upper;
      }
      if (lower_refl && t < s.lower) {
        w *= ipow(zq, s.lower - t);
        t = s.lower;
      }
      quad pay = 0;
      const bool inside = t >= lo && t <= hi;
      if (!inside) {
        if (t >= s.upper)
          pay = (s.payoff == Payoff::Indicator || s.payoff == Payoff::VPowerTime) ? 1 : 0;
        else
          pay = down_pay ? (t <= 0 ? ipow(zq, -t) : 1 / ipow(zq, t)) : (s.payoff == Payoff::VPowerTime ? 1 : 0);
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (blk(i, j) == 0.0) continue;
          const quad p = static_cast<quad>(blk(i, j)) * w;
          if (inside)
            sys.add_q(base + i, static_cast<std::size_t>(t - lo) * n + j, p);
          else if (pay != 0)
            sys.add_rhs(base + i, j, p * pay);
        }
      }
    }
  }
  const PhaseMatrix u = sys.solve();
  PhaseMatrix out(n, n);
  const std::size_t r0 = static_cast<std::size_t>(s.start - lo) * n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = u(r0 + i, j);
  return out;
}

PhaseMatrix solve_first_visit(const MacModel& model, int level, int lower, int upper) {
  require_valid(model);
  if (!(lower <= level && level <= upper && lower <= 0 && 0 <= upper) || level == 0)
    throw DomainError("first visit needs lower <= level, 0 <= upper and level != 0");
  const std::int64_t levels = static_cast<std::int64_t>(upper) - lower;  // target excluded
  check_state_count(levels, model);
  const std::size_t n = static_cast<std::size_t>(model.n_phases);
  const int m_max = model.max_down_jump();
  auto index = [&](int l) { return static_cast<std::size_t>(l < level ? l - lower : l - lower - 1); };
  const std::size_t states = static_cast<std::size_t>(levels) * n;
  // Removing the target level shifts indices by at most one level; widen the band.
  BandedSystem sys(states, (static_cast<std::size_t>(m_max) + 2) * n, 3 * n, n);
  for (int l = lower; l <= upper; ++l) {
    if (l == level) continue;
    const std::size_t base = index(l) * n;
    for (int jump = 1; jump >= -m_max; --jump) {
      const PhaseMatrix& blk = model.block(jump);
      const int t = l + jump;
      if (t < lower || t > upper) continue;  // truncated away
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          if (blk(i, j) == 0.0) continue;
          const quad p = static_cast<quad>(blk(i, j)) * static_cast<quad>(model.kill_v);
          if (t == level)
            sys.add_rhs(base + i, j, p);
          else
            sys.add_q(base + i, index(t) * n + j, p);
        }
    }
  }
  const PhaseMatrix u = sys.solve();
  PhaseMatrix out(n, n);
  const std::size_t r0 = index(0) * n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = u(r0 + i, j);
  return out;
}

int lower_truncation_depth(const MacModel& model) {
  const int n = model.n_phases;
  Eigen::MatrixXd a0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a0(i, j) = model.a_down[0](i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a0, false);
  double rho = 0.0;
  for (int k = 0; k < n; ++k) rho = std::max(rho, std::abs(es.eigenvalues()[k]));
  if (!(rho < 1.0)) throw NumericalError("A0 has spectral radius 1; no finite truncation");
  return std::max(40, static_cast<int>(std::ceil(40.0 / (1.0 - rho))));
}

PhaseMatrix deepen(const std::function<PhaseMatrix(int)>& solve, int depth, double tol) {
  if (depth < 1) throw DomainError("deepen: depth must be positive");
  PhaseMatrix prev = solve(depth);
  for (;;) {
    if (depth > kStripStateGuard / 2) throw DomainError("deepen: truncation did not settle within the state guard");
    depth *= 2;
    PhaseMatrix next = solve(depth);
    if (max_abs_diff(next, prev) <= tol) return next;
    prev = std::move(next);
  }
}

}  // namespace macscale
