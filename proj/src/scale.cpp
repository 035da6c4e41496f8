#include "macscale/scale.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "macscale/fundamental.hpp"

namespace macscale {
namespace {

constexpr double kBlowUp = 1e300;
constexpr double kCondWarn = 1e12;

}  // namespace

std::string model_hash(const MacModel& model) {
  // FNV-1a over the raw bit patterns of every parameter.
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t dims[2] = {model.n_phases, model.max_down_jump()};
  feed(dims, sizeof dims);
  feed(&model.kill_v, sizeof model.kill_v);
  feed(model.a_up.data(), model.a_up.size() * sizeof(double));
  for (const auto& b : model.a_down) feed(b.data(), b.size() * sizeof(double));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

ScaleTable::ScaleTable(MacModel model, int n_max) : model_(std::move(model)), n_max_(n_max) {
  if (n_max < 0) throw DomainError("w_sequence: n_max must be >= 0");
  require_valid(model_);
  model_id_ = model_hash(model_);
  blocks_ = detail::killed_blocks(model_);
  const std::size_t n = static_cast<std::size_t>(model_.n_phases);
  const int m_max = model_.max_down_jump();

  const Lu<quad> up(blocks_[0]);
  if (up.singular()) throw NumericalError("w_sequence: A1 is singular");
  const QMatrix id = QMatrix::identity(n);
  const QMatrix i_minus_a0 = id - blocks_[1];

  w_.push_back(QMatrix(n, n));
  w_.push_back(up.inverse());
  // W(k) = (vA1)^{-1} [(I - vA0) W(k-1) - sum_{j=2}^{min(k,M+1)} vA_{-(j-1)} W(k-j)]
  for (int k = 2; k <= n_max + 1; ++k) {
    QMatrix rhs = i_minus_a0 * w_[k - 1];
    for (int j = 2; j <= std::min(k, m_max + 1); ++j) rhs -= blocks_[j] * w_[k - j];
    QMatrix wk = up.solve(rhs);
    if (!all_finite(wk) || max_abs(wk) > static_cast<quad>(kBlowUp))
      throw NumericalError("scale blow-up; reduce n_max (at n=" + std::to_string(k) + ")");
    w_.push_back(std::move(wk));
  }

  cond_.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int k = 1; k <= n_max; ++k) {
    const quad c = Lu<quad>(w_[k]).condition();
    cond_[k] = c < 0 ? INFINITY : (c > static_cast<quad>(1e308) ? INFINITY : static_cast<double>(c));
    if (cond_[k] > kCondWarn && warnings_.empty()) {
      std::ostringstream os;
      os << "W(n) condition number exceeds 1e12 from n=" << k
         << " (extended-precision evaluation keeps identities accurate)";
      warnings_.push_back(os.str());
    }
  }
}

PhaseMatrix ScaleTable::w(int n) const {
  if (n < 0 || n > n_max_) throw DomainError("scale table: n outside [0, n_max]; extend table");
  return cast<double>(w_[n]);
}

const QMatrix& ScaleTable::w_q(int n) const {
  if (n < 0 || n > n_max_ + 1) throw DomainError("scale table: n outside [0, n_max]; extend table");
  return w_[n];
}

double ScaleTable::condition(int n) const {
  if (n < 1 || n > n_max_) throw DomainError("scale table: condition index out of range");
  return cond_[n];
}

ScaleTable w_sequence(const MacModel& model, int n_max) { return ScaleTable(model, n_max); }

namespace detail {

QMatrix eval_F_q(const std::vector<QMatrix>& blocks, quad z) {
  QMatrix f = (1 / z) * blocks[0];
  quad zm = 1;
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    f += zm * blocks[k];
    zm *= z;
  }
  return f;
}

// Polynomial form, algebraically equal to the defining sum but free of the
// cancellation that sum suffers for small z:
//   Z(z,n) = W(n+1) vA1 - sum_{i=1}^{M} z^i sum_{k=max(n+i-M,1)}^{n} W(k) vA_{-(n+i-k)}
QMatrix z_matrix_q(const ScaleTable& table, quad z, int n) {
  if (n < 0 || n > table.n_max()) throw DomainError("z_matrix: n > n_max; extend table");
  if (!(z > 0)) throw DomainError("z_matrix: z must be positive");
  const auto& b = table.blocks_q();
  const int m_max = static_cast<int>(b.size()) - 2;
  QMatrix r = table.w_q(n + 1) * b[0];
  quad zi = 1;
  for (int i = 1; i <= m_max; ++i) {
    zi *= z;
    QMatrix s(r.rows(), r.cols());
    for (int k = std::max(n + i - m_max, 1); k <= n; ++k) mul_acc(table.w_q(k), b[n + i - k + 1], s);
    r -= zi * s;
  }
  return r;
}

}  // namespace detail

PhaseMatrix z_matrix(const ScaleTable& table, double z, int n) {
  if (!(z > 0.0)) throw DomainError("z_matrix: z must be positive");
  return cast<double>(detail::z_matrix_q(table, static_cast<quad>(z), n));
}

double gamma_radius(const MacModel& model) {
  const PhaseMatrix g = solve_G(model).result;
  const int n = static_cast<int>(g.rows());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("gamma_radius: eigenvalue solver failed");
  double best = INFINITY;
  for (int k = 0; k < n; ++k) best = std::min(best, std::abs(es.eigenvalues()[k]));
  return best;
}

double transform_residual(const ScaleTable& table, double z, int terms, bool right_side) {
  if (terms < 0 || terms > table.n_max()) throw DomainError("transform_residual: terms > n_max");
  const quad zq = static_cast<quad>(z);
  const std::size_t n = static_cast<std::size_t>(table.model().n_phases);
  QMatrix s(n, n);
  quad zk = 1;
  for (int k = 0; k <= terms; ++k) {
    s += zk * table.w_q(k);
    zk *= zq;
  }
  const QMatrix a = detail::eval_F_q(table.blocks_q(), zq) - QMatrix::identity(n);
  const QMatrix prod = right_side ? s * a : a * s;
  return static_cast<double>(norm_inf(prod - QMatrix::identity(n)));
}

}  // namespace macscale
