#include "macscale/catalog.hpp"

#include <cmath>

#include "macscale/oracle.hpp"

namespace macscale::catalog {

MacModel model_a(double kill_v) {
  MacModel m;
  m.n_phases = 2;
  m.a_up = {{0.4, 0.1}, {0.2, 0.3}};
  m.a_down = {PhaseMatrix{{0.1, 0.05}, {0.05, 0.1}}, PhaseMatrix{{0.2, 0.15}, {0.1, 0.25}}};
  m.kill_v = kill_v;
  return m;
}

MacModel scalar_walk(double p, double q, double kill_v) {
  MacModel m;
  m.n_phases = 1;
  m.a_up = {{p}};
  m.a_down = {PhaseMatrix{{1.0 - p - q}}, PhaseMatrix{{q}}};
  m.kill_v = kill_v;
  return m;
}

namespace {

std::vector<double> dirichlet(PathRng& rng, int k) {
  std::vector<double> w(static_cast<std::size_t>(k));
  double s = 0.0;
  for (double& x : w) {
    x = -std::log(1.0 - rng.uniform());
    s += x;
  }
  for (double& x : w) x /= s;
  return w;
}

}  // namespace

MacModel random_model(std::uint64_t seed, std::uint64_t index, int n, int max_down, DriftBias bias,
                      double kill_v) {
  PathRng rng(seed, index);
  MacModel m;
  m.n_phases = n;
  m.kill_v = kill_v;
  m.a_up = PhaseMatrix(n, n);
  m.a_down.assign(static_cast<std::size_t>(max_down) + 1, PhaseMatrix(n, n));
  for (int i = 0; i < n; ++i) {
    double lo = 0.25, hi = 0.6;
    if (bias == DriftBias::Up) lo = 0.45, hi = 0.65;
    if (bias == DriftBias::Down) lo = 0.2, hi = 0.35;
    const double p = lo + (hi - lo) * rng.uniform();
    const std::vector<double> up = dirichlet(rng, n);
    for (int j = 0; j < n; ++j) m.a_up(i, j) = p * (0.3 * up[j] + (i == j ? 0.7 : 0.0));
    const std::vector<double> share = dirichlet(rng, max_down + 1);
    for (int k = 0; k <= max_down; ++k) {
      const std::vector<double> w = dirichlet(rng, n);
      for (int j = 0; j < n; ++j) m.a_down[k](i, j) = (1.0 - p) * share[k] * w[j];
    }
    // Exact row sums: fold the rounding residue into the diagonal of A0.
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      s += m.a_up(i, j);
      for (const auto& b : m.a_down) s += b(i, j);
    }
    m.a_down[0](i, i) += 1.0 - s;
  }
  return m;
}

}  // namespace macscale::catalog
