// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "macscale/catalog.hpp"
#include "macscale/exit.hpp"
#include "macscale/fundamental.hpp"
#include "macscale/oracle.hpp"
#include "macscale/scale.hpp"

using namespace macscale;

namespace {

// Tolerances and budgets.
constexpr double kScalarGTol = 1e-12;
constexpr double kScalarWTol = 1e-10;
constexpr double kRuinTol = 1e-10;
constexpr double kScalarSeconds = 1.0;
constexpr double kOracleTol = 1e-8;
constexpr double kOracleSeconds = 120.0;
constexpr double kTransformTol = 1e-8;
constexpr double kTransformFloor = 1e-20;  // below this the residual is rounding noise
constexpr int kMixingTerms = 20;
constexpr double kProbWTol = 1e-8;
constexpr double kComplementTol = 1e-9;
constexpr double kMcSigmas = 3.0;
constexpr std::int64_t kMcPaths = 1000000;
constexpr double kMcCensorMax = 1e-4;
constexpr double kMcSeconds = 300.0;
constexpr double kFirstIncreaseTol = 1e-12;
constexpr std::int64_t kDriftSteps = 100000;
constexpr double kDominanceSlack = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", x);
  return b;
}

std::vector<MacModel> model_suite() {
  std::vector<MacModel> s{catalog::model_a(), catalog::model_a(0.9)};
  const catalog::DriftBias bias[] = {catalog::DriftBias::Up, catalog::DriftBias::Down, catalog::DriftBias::Mixed};
  for (std::uint64_t k = 0; k < 8; ++k)
    s.push_back(catalog::random_model(31, k, 1 + static_cast<int>(k % 4), 1 + static_cast<int>(k % 3), bias[k % 3],
                                      k % 4 == 3 ? 0.95 : 1.0));
  return s;
}

double max_row_defect(const PhaseMatrix& m, double target) {
  double e = 0.0;
  for (double s : row_sums(m)) e = std::max(e, std::fabs(s - target));
  return e;
}

double z_score(const Estimate& e, const PhaseMatrix& want) {
  double z = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double diff = std::fabs(e.mean.data()[i] - want.data()[i]);
    const double se = e.std_err.data()[i];
    z = std::max(z, se > 0.0 ? diff / se : (diff > 1e-12 ? INFINITY : 0.0));
  }
  return z;
}

// 1. Scalar reductions.
Outcome scalar_reductions() {
  Timer t;
  double eg = 0.0, ew = 0.0, er = 0.0;
  for (double p : {0.4, 0.5, 0.6}) {
    const double q = 1.0 - p;
    const MacModel m = catalog::scalar_walk(p, q);
    eg = std::max(eg, std::fabs(solve_G(m).result(0, 0) - std::min(1.0, p / q)));
    const ScaleTable tab(m, 20);
    auto w_exact = [&](int n) { return p == q ? n / p : (1.0 - std::pow(q / p, n)) / (p - q); };
    for (int n = 0; n <= 20; ++n) ew = std::max(ew, std::fabs(tab.w(n)(0, 0) - w_exact(n)));
    for (int a = 1; a <= 10; ++a)
      for (int b = 1; b <= 10; ++b) {
        // Gambler's ruin: probability of +a before -b from 0.
        const double r = q / p;
        const double want = p == q ? static_cast<double>(b) / (a + b) : (1.0 - std::pow(r, b)) / (1.0 - std::pow(r, a + b));
        er = std::max(er, std::fabs(two_sided_up(tab, a, b)(0, 0) - want));
      }
  }
  const double s = t.seconds();
  Outcome o;
  o.pass = eg <= kScalarGTol && ew <= kScalarWTol && er <= kRuinTol && s < kScalarSeconds;
  o.detail = "G err " + fmt(eg) + ", W err " + fmt(ew) + ", ruin err " + fmt(er) + ", " + fmt(s) + " s";
  return o;
}

// 2. Identities vs the exact strip solve on randomized models.
Outcome oracle_equivalence() {
  Timer t;
  double e = 0.0;
  std::string worst;
  const catalog::DriftBias bias[] = {catalog::DriftBias::Up, catalog::DriftBias::Down, catalog::DriftBias::Mixed};
  for (std::uint64_t k = 0; k < 50; ++k) {
    const int n = 1 + static_cast<int>(k % 4);
    const int mj = 1 + static_cast<int>((k / 4) % 3);
    const MacModel m = catalog::random_model(2024, k, n, mj, bias[k % 3], k % 2 ? 0.95 : 1.0);
    const ScaleTable tab(m, 16);
    auto note = [&](double err, const std::string& what) {
      if (err > e) {
        e = err;
        worst = what + " model " + std::to_string(k);
      }
    };
    for (int a = 1; a <= 8; ++a)
      for (int b = 1; b <= 8; ++b) {
        StripSpec up;
        up.lower = -b;
        up.upper = a;
        note(max_abs_diff(two_sided_up(tab, a, b), solve_strip(m, up)), "two_sided_up");
        for (double z : {0.6, 0.8, 1.0}) {
          StripSpec dn = up;
          dn.payoff = Payoff::ZPowerNegX;
          dn.z = z;
          note(max_abs_diff(two_sided_down(tab, a, b, z), solve_strip(m, dn)), "two_sided_down");
          StripSpec rf = up;
          rf.lower_barrier = Barrier::Reflecting;
          rf.z = z;
          note(max_abs_diff(one_sided_reflected_up(tab, a, b, z), solve_strip(m, rf)), "one_sided_reflected_up");
        }
      }
    for (int d = 0; d <= 8; ++d)
      for (int x = -d; x <= 0; ++x)
        for (double z : {0.6, 0.8, 1.0}) {
          StripSpec rf;
          rf.lower = -d;
          rf.upper = 1;
          rf.start = x;
          rf.lower_barrier = Barrier::Reflecting;
          rf.z = z;
          note(max_abs_diff(two_sided_reflection_pgf(tab, d, x, z), solve_strip(m, rf)), "two_sided_reflection_pgf");
        }
  }
  const double s = t.seconds();
  Outcome o;
  o.pass = e <= kOracleTol && s < kOracleSeconds;
  o.detail = "max err " + fmt(e) + (worst.empty() ? "" : " (" + worst + ")") + ", " + fmt(s) + " s";
  return o;
}

// 3. Partial sums of the W transform.
Outcome transform_identity() {
  double worst = 0.0;
  bool monotone = true;
  std::string where;
  const auto suite = model_suite();
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const MacModel& m = suite[i];
    const ScaleTable tab(m, 200);
    const double z = 0.5 * gamma_radius(m);
    const double r = std::max(transform_residual(tab, z, 200, false), transform_residual(tab, z, 200, true));
    worst = std::max(worst, r);
    double prev = INFINITY;
    for (int k = kMixingTerms; k <= 200; ++k) {
      const double rk = transform_residual(tab, z, k);
      if (rk > prev && rk > kTransformFloor) {
        monotone = false;
        where = "model " + std::to_string(i) + " at " + std::to_string(k) + " terms";
      }
      prev = rk;
    }
  }
  Outcome o;
  o.pass = worst <= kTransformTol && monotone;
  o.detail = "max residual " + fmt(worst) + (monotone ? ", monotone" : ", not monotone: " + where);
  return o;
}

// 4. W(n) = [G^-n - P(phase at first visit of -n)] L against the recursion.
Outcome probabilistic_w() {
  double e = 0.0;
  int used = 0;
  for (const MacModel& m : model_suite()) {
    if (!(m.kill_v < 1.0 || drift(m).classification == DriftClass::DriftsUp)) continue;
    ++used;
    const detail::Fundamentals f = detail::fundamentals_q(m);
    const ScaleTable tab(m, 10);
    const Lu<quad> glu(f.G);
    QMatrix ginv = QMatrix::identity(static_cast<std::size_t>(m.n_phases));
    for (int n = 1; n <= 10; ++n) {
      ginv = glu.solve(ginv);
      const QMatrix hit =
          cast<quad>(deepen([&](int span) { return solve_first_visit(m, -n, -n - span, span); }, 200));
      e = std::max(e, static_cast<double>(max_abs((ginv - hit) * f.L - tab.w_q(n))));
    }
  }
  Outcome o;
  o.pass = e <= kProbWTol && used > 0;
  o.detail = std::to_string(used) + " models, max err " + fmt(e);
  return o;
}

// 5. Up and down exits are complementary.
Outcome complementarity() {
  double e = 0.0;
  int used = 0;
  for (const MacModel& m : model_suite()) {
    if (m.kill_v < 1.0) continue;
    ++used;
    const ScaleTable tab(m, 16);
    for (int a = 1; a <= 8; ++a)
      for (int b = 1; b <= 8; ++b)
        e = std::max(e, max_row_defect(two_sided_up(tab, a, b) + two_sided_down(tab, a, b, 1.0), 1.0));
  }
  Outcome o;
  o.pass = e <= kComplementTol && used > 0;
  o.detail = std::to_string(used) + " models, max defect " + fmt(e);
  return o;
}

// 6. Monte-Carlo concordance.
Outcome monte_carlo() {
  Timer t;
  const std::vector<MacModel> models{catalog::model_a(),
                                     catalog::random_model(606, 0, 3, 2, catalog::DriftBias::Up),
                                     catalog::random_model(606, 1, 2, 3, catalog::DriftBias::Mixed, 0.95)};
  double worst = 0.0, censored = 0.0;
  bool identical = true;
  std::ostringstream det;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const MacModel& m = models[i];
    PathConfig cfg;
    cfg.n_paths = (kMcPaths + m.n_phases - 1) / m.n_phases;
    cfg.seed = 1000 + i;
    const ScaleTable tab(m, 8);
    auto run = [&](const char* what, const PathConfig& c, const Functional& f, const PhaseMatrix& want) {
      const Estimate e = simulate(m, c, f);
      const double z = z_score(e, want);
      worst = std::max(worst, z);
      censored = std::max(censored, e.censored_fraction);
      det << " " << what << i << "=" << fmt(z);
      return e;
    };

    const Estimate g1 = run("G", cfg, FirstPassageUp{1, 1.0}, solve_G(m).result);
    PathConfig again = cfg;
    again.threads = 1;
    const Estimate g2 = simulate(m, again, FirstPassageUp{1, 1.0});
    identical = identical && g1.mean == g2.mean && g1.std_err == g2.std_err;

    PathConfig fs = cfg;
    fs.reflection = {ReflectionKind::LowerAt, 1};
    run("fstar", fs, FirstPassageUp{1, 0.8}, f_star(tab, 2, 0.8));

    PathConfig pg = cfg;
    pg.reflection = {ReflectionKind::LowerAt, 3};
    pg.start_level = -2;
    run("pgf", pg, FirstPassageUp{1, 0.7}, two_sided_reflection_pgf(tab, 3, -2, 0.7));

    PathConfig rg = cfg;
    rg.reflection = {ReflectionKind::Strip, 2};
    rg.start_level = -1;
    run("reg", rg, RegulatorJoint{0.8, 0.9, false}, regulator_joint_transform(tab, 2, -1, 0.8, 0.9));
  }
  const double s = t.seconds();
  Outcome o;
  o.pass = worst <= kMcSigmas && identical && censored <= kMcCensorMax && s < kMcSeconds;
  o.detail = "max |z| " + fmt(worst) + (identical ? ", reruns identical" : ", reruns differ") + ", censored " +
             fmt(censored) + ", " + fmt(s) + " s;" + det.str();
  return o;
}

// 7. Transform of the first strict increase.
Outcome first_increase() {
  double e = 0.0;
  for (double v : {0.3, 0.7, 0.95, 1.0})
    for (double z : {0.1, 0.5, 0.9, 1.0})
      for (double th : {0.05, 0.3, 0.6, 0.9}) {
        const PhaseMatrix f0{{1.0 - th}};
        const PhaseMatrix fz{{1.0 - th + th * z}};
        const double want = v * th * z / (1.0 - v * (1.0 - th));
        e = std::max(e, std::fabs(first_increase_transform(f0, fz, v)(0, 0) - want));
      }

  // Two phases, jumps 0, +1, +2.
  const std::vector<PhaseMatrix> blocks{PhaseMatrix{{0.3, 0.2}, {0.1, 0.4}}, PhaseMatrix{{0.2, 0.1}, {0.2, 0.1}},
                                        PhaseMatrix{{0.1, 0.1}, {0.05, 0.15}}};
  const double v = 0.9, z = 0.7;
  const PhaseMatrix fz = blocks[0] + z * blocks[1] + (z * z) * blocks[2];
  PathConfig cfg;
  cfg.n_paths = 200000;
  cfg.seed = 77;
  const Estimate est = simulate_first_increase(blocks, v, z, cfg);
  const double zs = z_score(est, first_increase_transform(blocks[0], fz, v));
  Outcome o;
  o.pass = e <= kFirstIncreaseTol && zs <= kMcSigmas;
  o.detail = "scalar grid err " + fmt(e) + ", two-phase MC |z| " + fmt(zs);
  return o;
}

// 8. Drift sign against simulated X_n / n; oscillating models refuse L.
Outcome drift_classification() {
  bool ok = true;
  int checked = 0;
  std::ostringstream det;
  for (const MacModel& m : model_suite()) {
    const DriftInfo d = drift(m);
    if (d.classification == DriftClass::Oscillates) continue;
    PathConfig cfg;
    cfg.n_paths = 10;
    cfg.seed = 5;
    const Estimate e = simulate(m, cfg, Displacement{kDriftSteps});
    const double want = d.classification == DriftClass::DriftsUp ? 1.0 : -1.0;
    // The estimate splits X_n / n by end phase; the row sum is the mean per start phase.
    for (double x : row_sums(e.mean))
      if (x * want <= 0.0) {
        ok = false;
        det << " mismatch (kappa' " << fmt(d.kappa_prime_1) << ", X/n " << fmt(x) << ")";
      }
    ++checked;
  }

  MacModel osc;
  osc.n_phases = 2;
  osc.a_up = PhaseMatrix{{0.3, 0.1}, {0.1, 0.3}};
  osc.a_down = {PhaseMatrix{{0.1, 0.1}, {0.1, 0.1}}, PhaseMatrix{{0.3, 0.1}, {0.1, 0.3}}};
  int refused = 0;
  for (const MacModel& m : {catalog::scalar_walk(0.5, 0.5), osc}) {
    auto refuses = [](const std::function<void()>& f) {
      try {
        f();
      } catch (const NumericalError& e) {
        return std::string(e.what()).find("L infinite") != std::string::npos;
      }
      return false;
    };
    const ScaleTable tab(m, 4);
    refused += refuses([&] { occupation_L(m); });
    refused += refuses([&] { one_sided_down(tab, 1, 0.9); });
  }
  Outcome o;
  o.pass = ok && refused == 4 && checked > 0;
  o.detail = std::to_string(checked) + " drift signs checked, " + std::to_string(refused) + "/4 oscillating refusals" +
             det.str();
  return o;
}

// 9. Extra killing never adds mass.
Outcome killing_dominance() {
  double e = 0.0;
  auto cmp = [&](const PhaseMatrix& lo, const PhaseMatrix& hi) {
    for (std::size_t i = 0; i < lo.size(); ++i) e = std::max(e, lo.data()[i] - hi.data()[i]);
  };
  int outputs = 0;
  for (const MacModel& base : model_suite()) {
    const MacModel m1 = base.with_kill(1.0);
    const ScaleTable t1(m1, 12);
    const bool finite_l = drift(m1).classification != DriftClass::Oscillates;
    for (double v : {0.95, 0.8}) {
      const MacModel mv = base.with_kill(v);
      const ScaleTable tv(mv, 12);
      cmp(solve_G(mv).result, solve_G(m1).result);
      if (finite_l) {
        cmp(occupation_L(mv), occupation_L(m1));
        cmp(one_sided_down(tv, 2, 0.8), one_sided_down(t1, 2, 0.8));
        cmp(hitting_down(mv, 2), hitting_down(m1, 2));
      }
      for (int a = 1; a <= 6; ++a)
        for (int b = 1; b <= 6; ++b) {
          cmp(two_sided_up(tv, a, b), two_sided_up(t1, a, b));
          cmp(two_sided_down(tv, a, b, 0.8), two_sided_down(t1, a, b, 0.8));
          cmp(one_sided_reflected_up(tv, a, b, 0.8), one_sided_reflected_up(t1, a, b, 0.8));
          outputs += 3;
        }
      for (int d = 0; d <= 6; ++d) {
        cmp(f_star(tv, d + 1, 0.8), f_star(t1, d + 1, 0.8));
        for (int x = -d; x <= 0; ++x) {
          cmp(two_sided_reflection_pgf(tv, d, x, 0.8), two_sided_reflection_pgf(t1, d, x, 0.8));
          cmp(regulator_joint_transform(tv, d, x, 0.8, 0.9), regulator_joint_transform(t1, d, x, 0.8, 0.9));
          outputs += 2;
        }
      }
    }
  }
  Outcome o;
  o.pass = e <= kDominanceSlack;
  o.detail = std::to_string(outputs) + " transform pairs, max excess " + fmt(e);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion all[] = {
      {"scalar closed forms", scalar_reductions},
      {"identities vs strip solve", oracle_equivalence},
      {"W transform partial sums", transform_identity},
      {"probabilistic W", probabilistic_w},
      {"exit complementarity", complementarity},
      {"Monte-Carlo concordance", monte_carlo},
      {"first increase transform", first_increase},
      {"drift classification", drift_classification},
      {"killing dominance", killing_dominance},
  };
  int failed = 0, k = 0;
  for (const auto& c : all) {
    ++k;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d: %s  [%s]\n", o.pass ? "PASS" : "FAIL", k, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
