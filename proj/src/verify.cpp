#include "macscale/verify.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "macscale/exit.hpp"
#include "macscale/fundamental.hpp"
#include "macscale/oracle.hpp"
#include "macscale/scale.hpp"

namespace macscale {
namespace {

// Appends a result; exceptions inside the check count as a failure.
void check(std::vector<PropertyResult>& out, const std::string& name, const std::string& anchor,
           double tol, const std::function<double()>& err) {
  PropertyResult r{name, anchor, false, false, 0.0, tol, {}};
  try {
    r.value = err();
    r.passed = r.value <= tol;
  } catch (const std::exception& e) {
    r.detail = e.what();
  }
  out.push_back(std::move(r));
}

void skip(std::vector<PropertyResult>& out, const std::string& name, const std::string& anchor,
          const std::string& why) {
  out.push_back({name, anchor, true, true, 0.0, 0.0, why});
}

double max_row_defect(const PhaseMatrix& m, double target) {
  double e = 0.0;
  for (double s : row_sums(m)) e = std::max(e, std::fabs(s - target));
  return e;
}

// Largest |mean - exact| / se over entries; entries with zero se must match exactly.
// Censored paths contribute zero, so the estimate may sit below the truth by
// up to the censored fraction; that shortfall is not counted against it.
double z_score(const Estimate& e, const PhaseMatrix& exact) {
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    double d = e.mean.data()[i] - exact.data()[i];
    d = d < 0.0 ? std::max(0.0, -d - e.censored_fraction) : d;
    const double se = e.std_err.data()[i];
    worst = std::max(worst, se > 0 ? d / se : (d > 1e-12 ? INFINITY : 0.0));
  }
  return worst;
}

// Per-entry z threshold keeping the family-wise false-alarm rate of k
// comparisons at that of a single 3-sigma test.
double bonferroni_z(std::size_t k) {
  const double alpha = std::erfc(3.0 / std::sqrt(2.0)) / static_cast<double>(k);
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid / std::sqrt(2.0)) > alpha ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

std::vector<PropertyResult> verify_model(const MacModel& model, const VerifyOptions& opts) {
  std::vector<PropertyResult> out;
  const ValidationReport vr = validate(model);
  check(out, "validate", "model invariants hold", 0.0, [&] { return vr.ok ? 0.0 : 1.0; });
  if (!vr.ok) return out;

  const std::size_t n = static_cast<std::size_t>(model.n_phases);
  const int lv = opts.max_level;
  const bool killed = model.kill_v < 1.0;
  const DriftInfo dr = drift(model);
  const bool finite_l = killed || dr.classification != DriftClass::Oscillates;

  check(out, "stationary", "pi P = pi, sum pi = 1", 1e-12, [&] {
    const std::vector<double> pi = stationary(model);
    const PhaseMatrix p = transition_matrix(model);
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = -pi[j];
      for (std::size_t i = 0; i < n; ++i) s += pi[i] * p(i, j);
      e = std::max(e, std::fabs(s));
    }
    return e;
  });

  check(out, "perron", "v'F = kappa v', F h = kappa h, v'h = 1, pi'h = 1", 1e-10, [&] {
    double e = 0.0;
    const std::vector<double> pi = stationary(model);
    for (double z : {1.0, 0.9}) {
      const SpectralData sd = perron(model, z);
      const PhaseMatrix f = (1.0 / model.kill_v) * eval_F(model, z);
      double vh = 0.0, ph = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double fh = 0.0, vf = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          fh += f(i, j) * sd.right[j];
          vf += sd.left[j] * f(j, i);
        }
        e = std::max({e, std::fabs(fh - sd.kappa * sd.right[i]), std::fabs(vf - sd.kappa * sd.left[i])});
        vh += sd.left[i] * sd.right[i];
        ph += pi[i] * sd.right[i];
      }
      e = std::max({e, std::fabs(vh - 1.0), std::fabs(ph - 1.0)});
      if (z == 1.0) e = std::max(e, std::fabs(sd.kappa - 1.0));
    }
    return e;
  });

  PhaseMatrix g;
  check(out, "solve_G.defect", "G = v sum A_-m G^(m+1)", 1e-13, [&] {
    const SolveReport rep = solve_G(model);
    g = rep.result;
    return rep.residual;
  });
  if (g.size() == 0) return out;

  check(out, "solve_G.row_sums", "G e < e if killed, = e if unkilled and not drifting down", 1e-9, [&] {
    const std::vector<double> s = row_sums(g);
    double e = 0.0;
    for (double x : s) {
      if (killed) e = std::max(e, x < 1.0 ? 0.0 : x - 1.0 + 1e-9);
      else if (dr.classification != DriftClass::DriftsDown) e = std::max(e, std::fabs(x - 1.0));
      else e = std::max(e, x <= 1.0 + 1e-12 ? 0.0 : x - 1.0);
    }
    return e;
  });

  if (killed || dr.classification == DriftClass::DriftsUp) {
    check(out, "solve_G.strip_oracle", "G = phase law at first passage to +1", 1e-6, [&] {
      const PhaseMatrix o = deepen(
          [&](int depth) {
            StripSpec s;
            s.lower = -depth;
            s.upper = 1;
            return solve_strip(model, s);
          },
          lower_truncation_depth(model));
      return max_abs_diff(g, o);
    });
  } else {
    skip(out, "solve_G.strip_oracle", "G = phase law at first passage to +1", "needs upward drift or killing");
  }

  // Transform identity at z = gamma / 2.
  check(out, "scale.transform", "(vF(z) - I) sum z^n W(n) = I, both sides", 1e-8, [&] {
    const double gamma = gamma_radius(model);
    const ScaleTable t(model, 200);
    return std::max(transform_residual(t, 0.5 * gamma, 200, false), transform_residual(t, 0.5 * gamma, 200, true));
  });

  if (finite_l) {
    check(out, "scale.probabilistic_W", "W(n) = [G^-n - P(J at first visit of -n)] L", 1e-8, [&] {
      const detail::Fundamentals f = detail::fundamentals_q(model);
      const ScaleTable t(model, 10);
      const Lu<quad> glu(f.G);
      QMatrix ginv = QMatrix::identity(n);
      double e = 0.0;
      for (int k = 1; k <= 10; ++k) {
        ginv = glu.solve(ginv);
        const QMatrix hit =
            cast<quad>(deepen([&](int span) { return solve_first_visit(model, -k, -k - span, span); }, 200));
        const QMatrix w = (ginv - hit) * f.L;
        e = std::max(e, static_cast<double>(max_abs(w - t.w_q(k))));
      }
      return e;
    });
    // Both sides are products of rounded matrices; the error is relative to |W(n)| |L^-1|.
    check(out, "fundamental.hitting_identity", "W(n) L^-1 G^n = I - hitting_down(n) G^n", 1e-9, [&] {
      const PhaseMatrix l = occupation_L(model);
      const double l_inv = norm_inf(inverse(l));
      const ScaleTable t(model, 10);
      double e = 0.0;
      for (int k = 1; k <= 10; ++k) {
        const PhaseMatrix gn = power(g, k);
        const PhaseMatrix lhs = right_divide(t.w(k), l) * gn;
        const PhaseMatrix rhs = PhaseMatrix::identity(n) - hitting_down(model, k) * gn;
        e = std::max(e, max_abs_diff(lhs, rhs) / std::max(1.0, norm_inf(t.w(k)) * l_inv));
      }
      return e;
    });
  } else {
    skip(out, "scale.probabilistic_W", "W(n) = [G^-n - P(J at first visit of -n)] L", "L infinite");
    skip(out, "fundamental.hitting_identity", "W(n) L^-1 G^n = I - hitting_down(n) G^n", "L infinite");
  }

  const ScaleTable table(model, 2 * lv + 2);
  check(out, "exit.strip_oracle", "exit and reflection identities vs exact strip solve", 1e-8, [&] {
    double e = 0.0;
    for (int a = 1; a <= lv; ++a)
      for (int b = 1; b <= lv; ++b) {
        StripSpec up;
        up.lower = -b;
        up.upper = a;
        e = std::max(e, max_abs_diff(two_sided_up(table, a, b), solve_strip(model, up)));
        for (double z : {0.6, 1.0}) {
          StripSpec dn = up;
          dn.payoff = Payoff::ZPowerNegX;
          dn.z = z;
          e = std::max(e, max_abs_diff(two_sided_down(table, a, b, z), solve_strip(model, dn)));
          StripSpec rf = up;
          rf.lower_barrier = Barrier::Reflecting;
          rf.z = z;
          e = std::max(e, max_abs_diff(one_sided_reflected_up(table, a, b, z), solve_strip(model, rf)));
        }
      }
    for (int d = 0; d <= lv; ++d)
      for (int x = -d; x <= 0; ++x)
        for (double z : {0.6, 1.0}) {
          StripSpec rf;
          rf.lower = -d;
          rf.upper = 1;
          rf.start = x;
          rf.lower_barrier = Barrier::Reflecting;
          rf.z = z;
          e = std::max(e, max_abs_diff(two_sided_reflection_pgf(table, d, x, z), solve_strip(model, rf)));
          for (double v : {1.0, 0.7}) {
            StripSpec rg;
            rg.lower = -(d + 1);
            rg.upper = 0;
            rg.start = x;
            rg.upper_barrier = Barrier::Reflecting;
            rg.payoff = Payoff::ZPowerNegX;
            rg.z = z;
            rg.v = v;
            PhaseMatrix o = solve_strip(model, rg);
            o *= std::pow(z, -d);
            e = std::max(e, max_abs_diff(regulator_joint_transform(table, d, x, z, v), o));
          }
        }
    return e;
  });

  if (!killed) {
    check(out, "exit.complementarity", "two_sided_up e + two_sided_down(z=1) e = e", 1e-9, [&] {
      double e = 0.0;
      for (int a = 1; a <= lv; ++a)
        for (int b = 1; b <= lv; ++b)
          e = std::max(e, max_row_defect(two_sided_up(table, a, b) + two_sided_down(table, a, b, 1.0), 1.0));
      return e;
    });
    check(out, "exit.regulator_stochastic", "regulator transform at v=z=1 is stochastic", 1e-9, [&] {
      double e = 0.0;
      for (int d = 0; d <= lv; ++d)
        for (int x = -d; x <= 0; ++x)
          e = std::max(e, max_row_defect(regulator_joint_transform(table, d, x, 1.0, 1.0), 1.0));
      return e;
    });
  } else {
    skip(out, "exit.complementarity", "two_sided_up e + two_sided_down(z=1) e = e", "killed model");
    skip(out, "exit.regulator_stochastic", "regulator transform at v=z=1 is stochastic", "killed model");
  }

  check(out, "exit.f_star_identity", "F*(z)[I + z W(d+1)(I - F(z)) Z(z,d)^-1] = zI", 1e-10, [&] {
    double e = 0.0;
    for (int w = 1; w <= lv; ++w)
      for (double z : {0.3, 0.7, 1.0}) {
        const PhaseMatrix fs = f_star(table, w, z);
        PhaseMatrix br = table.w(w) * (PhaseMatrix::identity(n) - eval_F(model, z));
        br = PhaseMatrix::identity(n) + z * right_divide(br, z_matrix(table, z, w - 1));
        PhaseMatrix lhs = fs * br;
        e = std::max(e, max_abs_diff(lhs, z * PhaseMatrix::identity(n)));
      }
    return e;
  });
  check(out, "exit.f_star_zero_limit", "F*(0+) = W(d+1) W(d+2)^-1", 1e-6, [&] {
    double e = 0.0;
    for (int w = 1; w <= lv; ++w)
      e = std::max(e, max_abs_diff(f_star(table, w, 1e-8), right_divide(table.w(w), table.w(w + 1))));
    return e;
  });

  if (finite_l) {
    check(out, "exit.one_sided_down", "one-sided downward passage vs deep strip solve", 1e-6, [&] {
      double e = 0.0;
      for (int b = 1; b <= 3; ++b)
        for (double z : {0.6, 0.9, 1.0}) {
          const PhaseMatrix o = deepen(
              [&](int upper) {
                StripSpec s;
                s.lower = -b;
                s.upper = upper;
                s.payoff = Payoff::ZPowerNegX;
                s.z = z;
                return solve_strip(model, s);
              },
              150);
          e = std::max(e, max_abs_diff(one_sided_down(table, b, z), o));
        }
      return e;
    });
  } else {
    skip(out, "exit.one_sided_down", "one-sided downward passage vs deep strip solve", "L infinite");
  }

  check(out, "killing.dominance", "transforms under extra killing are entrywise smaller", 1e-12, [&] {
    const ScaleTable tk(model.with_kill(0.9 * model.kill_v), table.n_max());
    double e = 0.0;
    auto cmp = [&](const PhaseMatrix& lo, const PhaseMatrix& hi) {
      for (std::size_t i = 0; i < lo.size(); ++i) e = std::max(e, lo.data()[i] - hi.data()[i]);
    };
    for (int a = 1; a <= lv; ++a)
      for (int b = 1; b <= lv; ++b) {
        cmp(two_sided_up(tk, a, b), two_sided_up(table, a, b));
        cmp(two_sided_down(tk, a, b, 0.8), two_sided_down(table, a, b, 0.8));
        cmp(one_sided_reflected_up(tk, a, b, 0.8), one_sided_reflected_up(table, a, b, 0.8));
      }
    for (int d = 0; d <= lv; ++d) {
      cmp(two_sided_reflection_pgf(tk, d, 0, 0.8), two_sided_reflection_pgf(table, d, 0, 0.8));
      cmp(regulator_joint_transform(tk, d, 0, 0.8, 0.9), regulator_joint_transform(table, d, 0, 0.8, 0.9));
    }
    return e;
  });

  if (killed || dr.classification == DriftClass::DriftsUp) {
    check(out, "oracle.mc_G", "simulated phase at first passage to +1 matches G (3 SE family-wise)",
          bonferroni_z(g.size()), [&] {
      PathConfig cfg;
      cfg.n_paths = opts.mc_paths;
      cfg.seed = opts.seed;
      cfg.max_steps = 100000;
      return z_score(simulate(model, cfg, FirstPassageUp{1, 1.0}), g);
    });
  } else {
    skip(out, "oracle.mc_G", "simulated phase at first passage to +1 matches G (3 SE family-wise)", "needs upward drift or killing");
  }

  if (dr.classification != DriftClass::Oscillates) {
    check(out, "model.drift_sign", "sign of -kappa'(1) matches simulated X_n / n", 0.0, [&] {
      PathConfig cfg;
      cfg.n_paths = 64;
      cfg.seed = opts.seed;
      const Estimate e = simulate(model.with_kill(1.0), cfg, Displacement{20000});
      const double mean = std::accumulate(e.mean.values().begin(), e.mean.values().end(), 0.0) / n;
      return (mean > 0) == (dr.kappa_prime_1 < 0) ? 0.0 : 1.0;
    });
  } else {
    skip(out, "model.drift_sign", "sign of -kappa'(1) matches simulated X_n / n", "oscillating");
  }
  return out;
}

}  // namespace macscale
