#include "macscale/exit.hpp"

#include <cmath>
#include <sstream>

#include "macscale/fundamental.hpp"

namespace macscale {
namespace {

constexpr double kCondWarn = 1e12;
// Beyond this even the extended-precision identities lose double accuracy.
constexpr double kCondFail = 1e28;

void require_z(double z, const char* op) {
  if (!(z > 0.0 && z <= 1.0)) throw DomainError(std::string(op) + ": z must lie in (0,1]");
}

void require_levels(const ScaleTable& t, int top, const char* op) {
  if (top > t.n_max())
    throw DomainError(std::string(op) + ": needs n_max >= " + std::to_string(top) + "; extend table");
}

// LU of a bracket matrix with the condition guard shared by all identities.
Lu<quad> guarded(const QMatrix& m, const std::string& what, Diagnostics* diag, double z = NAN) {
  Lu<quad> lu(m);
  std::ostringstream where;
  where << what;
  if (!std::isnan(z)) where << " at z=" << z;
  if (lu.singular()) throw NumericalError(where.str() + " is singular");
  const double c = static_cast<double>(lu.condition());
  if (!(c < kCondFail)) {
    std::ostringstream os;
    os << where.str() << " is ill-conditioned (condition " << c << ")";
    throw NumericalError(os.str());
  }
  if (c > kCondWarn) {
    std::ostringstream os;
    os << where.str() << " has condition " << c;
    warn(diag, os.str());
  }
  return lu;
}

QMatrix zq(const ScaleTable& t, quad z, int n) { return detail::z_matrix_q(t, z, n); }

}  // namespace

ScaleTable table_for(const ScaleTable& table, std::optional<double> v) {
  if (!v || *v == table.kill_v()) return table;
  if (!(*v > 0.0 && *v <= 1.0)) throw DomainError("v must lie in (0,1]");
  return ScaleTable(table.model().with_kill(*v), table.n_max());
}

PhaseMatrix two_sided_up(const ScaleTable& t, int a, int b, Diagnostics* diag) {
  if (a < 1 || b < 0) throw DomainError("two_sided_up: need a >= 1, b >= 0");
  const std::size_t n = static_cast<std::size_t>(t.model().n_phases);
  if (b == 0) return PhaseMatrix(n, n);
  require_levels(t, a + b, "two_sided_up");
  const Lu<quad> lu = guarded(t.w_q(a + b), "W(a+b)", diag);
  return cast<double>(lu.solve_right(t.w_q(b)));
}

PhaseMatrix f_star(const ScaleTable& t, int width, double z, Diagnostics* diag) {
  if (width < 1) throw DomainError("f_star: width must be >= 1");
  require_z(z, "f_star");
  require_levels(t, width, "f_star");
  const quad q = static_cast<quad>(z);
  const Lu<quad> lu = guarded(zq(t, q, width), "Z-identity bracket", diag, z);
  return cast<double>(lu.solve_right(zq(t, q, width - 1)));
}

PhaseMatrix one_sided_reflected_up(const ScaleTable& t, int a, int b, double z, Diagnostics* diag) {
  if (a < 1 || b < 0) throw DomainError("one_sided_reflected_up: need a >= 1, b >= 0");
  require_z(z, "one_sided_reflected_up");
  require_levels(t, a + b, "one_sided_reflected_up");
  const quad q = static_cast<quad>(z);
  const Lu<quad> lu = guarded(zq(t, q, a + b), "Z(z,a+b)", diag, z);
  return cast<double>(lu.solve_right(zq(t, q, b)));
}

PhaseMatrix two_sided_down(const ScaleTable& t, int a, int b, double z, Diagnostics* diag) {
  if (a < 1 || b < 1) throw DomainError("two_sided_down: need a, b >= 1");
  require_z(z, "two_sided_down");
  require_levels(t, a + b, "two_sided_down");
  const quad q = static_cast<quad>(z);
  const Lu<quad> lu = guarded(t.w_q(a + b), "W(a+b)", diag);
  const QMatrix up = lu.solve_right(t.w_q(b));
  QMatrix r = zq(t, q, b - 1) - up * zq(t, q, a + b - 1);
  r *= ipow(q, b - 1);
  return cast<double>(r);
}

PhaseMatrix one_sided_down(const ScaleTable& t, int b, double z, Diagnostics* diag) {
  if (b < 1) throw DomainError("one_sided_down: need b >= 1");
  require_z(z, "one_sided_down");
  require_levels(t, b, "one_sided_down");
  detail::require_finite_occupation(t.model(), "one_sided_down");
  const detail::Fundamentals f = detail::fundamentals_q(t.model());
  if (diag) {
    const double gamma = gamma_radius(t.model());
    if (z >= gamma) {
      std::ostringstream os;
      os << "one_sided_down: z=" << z << " >= gamma=" << gamma << " (continuation of the identity)";
      diag->warn(os.str());
    }
  }
  const auto& blk = t.blocks_q();
  const int m_max = static_cast<int>(blk.size()) - 2;
  const quad q = static_cast<quad>(z);
  const Lu<quad> llu = guarded(f.L, "L", diag);

  // K(z) = vA1 - sum_i z^i sum_{j=1}^{M+1-i} L^{-1} G^j L vA_{-(i+j-1)}
  std::vector<QMatrix> conj;  // L^{-1} G^j L, j = 1..M
  QMatrix gj = f.G;
  for (int j = 1; j <= m_max; ++j) {
    conj.push_back(llu.solve(gj * f.L));
    gj = gj * f.G;
  }
  QMatrix k = blk[0];
  quad zi = 1;
  for (int i = 1; i <= m_max; ++i) {
    zi *= q;
    QMatrix s(k.rows(), k.cols());
    for (int j = 1; j <= m_max + 1 - i; ++j) mul_acc(conj[j - 1], blk[i + j], s);
    k -= zi * s;
  }
  QMatrix r = zq(t, q, b - 1) - t.w_q(b) * k;
  r *= ipow(q, b - 1);
  return cast<double>(r);
}

PhaseMatrix two_sided_reflection_pgf(const ScaleTable& t, int d, int x, double z, Diagnostics* diag) {
  if (d < 0 || x > 0 || x < -d) throw DomainError("two_sided_reflection_pgf: need d >= 0, -d <= x <= 0");
  require_z(z, "two_sided_reflection_pgf");
  require_levels(t, d + 1, "two_sided_reflection_pgf");
  const quad q = static_cast<quad>(z);
  const Lu<quad> lu = guarded(zq(t, q, d + 1), "Z(z,d+1)", diag, z);
  return cast<double>(lu.solve_right(zq(t, q, d + x)));
}

PhaseMatrix regulator_joint_transform(const ScaleTable& t, int d, int x, double z, double v,
                                      Diagnostics* diag) {
  if (d < 0 || x > 0 || x < -d)
    throw DomainError("regulator_joint_transform: need d >= 0, -d <= x <= 0");
  require_z(z, "regulator_joint_transform");
  if (!(v > 0.0 && v <= 1.0)) throw DomainError("regulator_joint_transform: v must lie in (0,1]");
  require_levels(t, d + 2, "regulator_joint_transform");
  const quad q = static_cast<quad>(z);
  const quad vq = static_cast<quad>(v);
  const std::size_t n = static_cast<std::size_t>(t.model().n_phases);
  const QMatrix id = QMatrix::identity(n);

  const Lu<quad> w2 = guarded(t.w_q(d + 2), "W(d+2)", diag);
  const Lu<quad> w1 = guarded(t.w_q(d + 1), "W(d+1)", diag);
  const QMatrix lambda = w2.solve_right(t.w_q(d + 1));  // W(d+1) W(d+2)^{-1}
  const QMatrix zd1 = zq(t, q, d + 1);
  const Lu<quad> zlu = guarded(zd1, "Z(z,d+1)", diag, z);
  const QMatrix fstar = zlu.solve_right(zq(t, q, d));

  Lu<quad> mlu(id - vq * lambda);
  if (mlu.singular()) throw NumericalError("v equals eigenvalue of G_d");
  const QMatrix x1 = mlu.solve(fstar - lambda);
  const QMatrix px = w1.solve_right(t.w_q(d + 1 + x));
  QMatrix r = px * (x1 - fstar) * zd1;
  r += zq(t, q, d + x);
  return cast<double>(r);
}

PhaseMatrix first_increase_transform(const PhaseMatrix& f0, const PhaseMatrix& fz, double v) {
  if (!f0.square() || f0.rows() != fz.rows() || !fz.square())
    throw DomainError("first_increase_transform: shape mismatch");
  if (!(v > 0.0 && v <= 1.0)) throw DomainError("first_increase_transform: v must lie in (0,1]");
  const QMatrix a = cast<quad>(f0), b = cast<quad>(fz);
  if (Lu<quad>(a).singular() || Lu<quad>(b).singular())
    throw DomainError("first_increase_transform: F(0) and F(z) must be invertible");
  const quad vq = static_cast<quad>(v);
  const Lu<quad> lu(QMatrix::identity(a.rows()) - vq * a);
  if (lu.singular()) throw NumericalError("first_increase_transform: I - vF(0) is singular");
  // Sum over the number of non-increasing steps before the first increase.
  QMatrix r = lu.solve(b - a);
  r *= vq;
  return cast<double>(r);
}

}  // namespace macscale
