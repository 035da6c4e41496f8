#include "macscale/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <sstream>

namespace macscale {
namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kDriftTieTol = 1e-12;
constexpr double kPerronTol = 1e-12;
constexpr int kPerronMaxIter = 100000;

std::string block_name(int k) {
  // k indexes a_down: 0 -> "A0", 1 -> "A-1", ...
  return k == 0 ? "A0" : "A-" + std::to_string(k);
}

void check_block(const PhaseMatrix& b, const std::string& name, int n,
                 ValidationReport& rep) {
  if (static_cast<int>(b.rows()) != n || static_cast<int>(b.cols()) != n) {
    rep.violations.push_back({name, -1, "shape is not n_phases x n_phases"});
    return;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = b(i, j);
      if (!std::isfinite(x)) {
        rep.violations.push_back({name, i, "non-finite entry"});
        break;
      }
      if (x < 0.0) {
        rep.violations.push_back({name, i, "negative entry"});
        break;
      }
    }
  }
}

std::vector<double> mat_vec(const PhaseMatrix& a, const std::vector<double>& x) {
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double vec_max_abs(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

// Dominant eigenpair of a nonnegative irreducible matrix. The shift makes
// the iteration matrix primitive, so periodic chains converge too.
bool power_iterate(const PhaseMatrix& a, std::vector<double>& x, int& iters) {
  const std::size_t n = a.rows();
  const double shift = 0.5 * norm_inf(a) + 1e-300;
  x.assign(n, 1.0);
  for (iters = 1; iters <= kPerronMaxIter; ++iters) {
    std::vector<double> y = mat_vec(a, x);
    for (std::size_t i = 0; i < n; ++i) y[i] += shift * x[i];
    const double s = vec_max_abs(y);
    if (!(s > 0.0) || !std::isfinite(s)) return false;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= s;
      diff = std::max(diff, std::fabs(y[i] - x[i]));
    }
    x.swap(y);
    if (diff < kPerronTol) return true;
  }
  return false;
}

double eigen_residual(const PhaseMatrix& a, const std::vector<double>& x, double kappa) {
  std::vector<double> y = mat_vec(a, x);
  double r = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) r = std::max(r, std::fabs(y[i] - kappa * x[i]));
  return r;
}

std::vector<double> eigen_fallback(const PhaseMatrix& a, double& kappa) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("perron: eigen decomposition failed");
  int best = 0;
  for (int k = 1; k < n; ++k)
    if (es.eigenvalues()[k].real() > es.eigenvalues()[best].real()) best = k;
  kappa = es.eigenvalues()[best].real();
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::fabs(es.eigenvectors()(i, best).real());
  return x;
}

}  // namespace

const PhaseMatrix& MacModel::block(int jump) const {
  if (jump == 1) return a_up;
  if (jump > 1 || -jump > max_down_jump()) throw DomainError("no block for jump " + std::to_string(jump));
  return a_down[static_cast<std::size_t>(-jump)];
}

MacModel MacModel::with_kill(double v) const {
  MacModel m = *this;
  m.kill_v = v;
  return m;
}

ValidationReport validate(const MacModel& model) {
  ValidationReport rep;
  const int n = model.n_phases;
  if (n < 1) {
    rep.violations.push_back({"model", -1, "n_phases must be positive"});
    rep.ok = false;
    return rep;
  }
  if (!(model.kill_v > 0.0 && model.kill_v <= 1.0))
    rep.violations.push_back({"kill_v", -1, "kill_v outside (0,1]"});
  if (model.a_down.empty())
    rep.violations.push_back({"model", -1, "missing A0 block (max_down_jump < 0)"});

  check_block(model.a_up, "A1", n, rep);
  for (std::size_t k = 0; k < model.a_down.size(); ++k)
    check_block(model.a_down[k], block_name(static_cast<int>(k)), n, rep);
  if (!rep.violations.empty()) {
    rep.ok = false;
    return rep;
  }

  const PhaseMatrix p = transition_matrix(model);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += p(i, j);
    if (std::fabs(s - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os.precision(17);
      os << "row sum != 1 (got " << s << ")";
      rep.violations.push_back({"all", i, os.str()});
    }
  }

  bool any_down = false;
  for (const auto& b : model.a_down) any_down = any_down || max_abs(b) > 0.0;
  if (!any_down && n > 1)
    rep.violations.push_back({"model", -1, "all blocks other than A1 are zero"});

  rep.ok = rep.violations.empty();
  return rep;
}

void require_valid(const MacModel& model) {
  const ValidationReport rep = validate(model);
  if (rep.ok) return;
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& v : rep.violations) {
    os << " [" << v.block;
    if (v.row >= 0) os << " row " << v.row;
    os << ": " << v.rule << "]";
  }
  throw ValidationError(os.str());
}

PhaseMatrix eval_F(const MacModel& model, double z) {
  if (!(z > 0.0)) throw DomainError("eval_F: z must be positive");
  PhaseMatrix f = (1.0 / z) * model.a_up;
  double zm = 1.0;
  for (const auto& b : model.a_down) {
    f += zm * b;
    zm *= z;
  }
  f *= model.kill_v;
  return f;
}

PhaseMatrix transition_matrix(const MacModel& model) {
  PhaseMatrix p = model.a_up;
  for (const auto& b : model.a_down) p += b;
  return p;
}

bool is_irreducible(const PhaseMatrix& p) {
  // One strongly connected component iff every node reaches and is reached from 0.
  const std::size_t n = p.rows();
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < n; ++w) {
        const double e = forward ? p(u, w) : p(w, u);
        if (e > 0.0 && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return n > 0 && reach_all(true) && reach_all(false);
}

std::vector<double> stationary(const MacModel& model) {
  const PhaseMatrix p = transition_matrix(model);
  const std::size_t n = p.rows();
  if (!is_irreducible(p)) throw ValidationError("phase chain not irreducible");
  if (n == 1) return {1.0};

  // (P^T - I) pi = 0 with the last balance equation replaced by sum(pi) = 1.
  PhaseMatrix a = p.transpose() - PhaseMatrix::identity(n);
  PhaseMatrix rhs(n, 1);
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  rhs(n - 1, 0) = 1.0;
  const Lu<double> lu(a);
  PhaseMatrix x = lu.solve(rhs);
  // One refinement step keeps the residual at rounding level for larger N.
  PhaseMatrix r = rhs - a * x;
  x += lu.solve(r);

  std::vector<double> pi(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pi[i] = std::max(0.0, x(i, 0));
    s += pi[i];
  }
  for (double& v : pi) v /= s;
  return pi;
}

DriftInfo drift(const MacModel& model) {
  const std::vector<double> pi = stationary(model);
  const std::size_t n = pi.size();
  // sum_m m * A_{-m} applied to e
  std::vector<double> mean_jump(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s -= model.a_up(i, j);
    for (std::size_t k = 1; k < model.a_down.size(); ++k)
      for (std::size_t j = 0; j < n; ++j) s += static_cast<double>(k) * model.a_down[k](i, j);
    mean_jump[i] = s;
  }
  DriftInfo d;
  d.kappa_prime_1 = dot(pi, mean_jump);
  if (d.kappa_prime_1 < -kDriftTieTol)
    d.classification = DriftClass::DriftsUp;
  else if (d.kappa_prime_1 > kDriftTieTol)
    d.classification = DriftClass::DriftsDown;
  else
    d.classification = DriftClass::Oscillates;
  return d;
}

std::string to_string(DriftClass c) {
  switch (c) {
    case DriftClass::DriftsUp: return "DriftsUp";
    case DriftClass::DriftsDown: return "DriftsDown";
    default: return "Oscillates";
  }
}

SpectralData perron(const MacModel& model, double z) {
  if (!(z > 0.0)) throw DomainError("perron: z must be positive");
  const PhaseMatrix f = (1.0 / model.kill_v) * eval_F(model, z);
  if (!is_irreducible(f)) throw ValidationError("phase chain not irreducible");

  SpectralData sd;
  sd.z = z;
  std::vector<double> h, w;
  int it_r = 0, it_l = 0;
  const PhaseMatrix ft = f.transpose();
  bool ok = power_iterate(f, h, it_r) && power_iterate(ft, w, it_l);
  sd.iterations = std::max(it_r, it_l);
  if (ok) {
    const std::vector<double> fh = mat_vec(f, h);
    sd.kappa = dot(w, fh) / dot(w, h);
    ok = eigen_residual(f, h, sd.kappa) <= 1e-11 * std::max(1.0, sd.kappa) &&
         eigen_residual(ft, w, sd.kappa) <= 1e-11 * std::max(1.0, sd.kappa);
  }
  if (!ok) {
    sd.used_fallback = true;
    double k1 = 0.0, k2 = 0.0;
    h = eigen_fallback(f, k1);
    w = eigen_fallback(ft, k2);
    sd.kappa = 0.5 * (k1 + k2);
    const double r = std::max(eigen_residual(f, h, sd.kappa) / vec_max_abs(h),
                              eigen_residual(ft, w, sd.kappa) / vec_max_abs(w));
    if (!(r <= 1e-10 * std::max(1.0, sd.kappa)))
      throw NumericalError("perron: eigen-solver did not converge (residual " +
                           std::to_string(r) + ")");
  }

  const std::vector<double> pi = stationary(model);
  const double ph = dot(pi, h);
  for (double& x : h) x /= ph;
  const double wh = dot(w, h);
  for (double& x : w) x /= wh;
  sd.right = std::move(h);
  sd.left = std::move(w);
  return sd;
}

}  // namespace macscale
