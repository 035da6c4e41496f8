// macscale command-line front end. Reports are JSON (default) or CSV.
// Exit codes: 0 ok, 1 validation failure, 2 numerical failure, 3 usage.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "macscale/exit.hpp"
#include "macscale/fundamental.hpp"
#include "macscale/model_io.hpp"
#include "macscale/oracle.hpp"
#include "macscale/scale.hpp"
#include "macscale/verify.hpp"

using nlohmann::json;
using namespace macscale;

namespace {

struct Params {
  std::optional<double> z, v;
  std::optional<int> a, b, d, x, n;
};

json params_json(const Params& p) {
  json j = json::object();
  if (p.z) j["z"] = *p.z;
  if (p.v) j["v"] = *p.v;
  if (p.a) j["a"] = *p.a;
  if (p.b) j["b"] = *p.b;
  if (p.d) j["d"] = *p.d;
  if (p.x) j["x"] = *p.x;
  if (p.n) j["n"] = *p.n;
  return j;
}

class Report {
 public:
  explicit Report(json command) { doc_["command"] = std::move(command); }

  void add(const std::string& name, const PhaseMatrix& m, const Params& p = {}) {
    doc_["outputs"].push_back({{"name", name},
                               {"rows", m.rows()},
                               {"cols", m.cols()},
                               {"params", params_json(p)},
                               {"data", matrix_to_json(m)}});
  }
  json& diagnostics() { return doc_["diagnostics"]; }
  json& doc() { return doc_; }

  void warnings(const std::vector<std::string>& w) {
    for (const auto& s : w) doc_["diagnostics"]["warnings"].push_back(s);
  }

  std::string render(const std::string& format) const {
    if (format != "csv") return doc_.dump(2) + "\n";
    std::ostringstream os;
    os.precision(17);
    os << "output,row,col,value\n";
    if (doc_.contains("outputs"))
      for (const auto& o : doc_["outputs"]) {
        const auto& data = o["data"];
        for (std::size_t i = 0; i < data.size(); ++i)
          for (std::size_t j = 0; j < data[i].size(); ++j)
            os << o["name"].get<std::string>() << "," << i << "," << j << "," << data[i][j].get<double>() << "\n";
      }
    return os.str();
  }

 private:
  json doc_;
};

MacModel load(const std::string& path, Report& rep) {
  MacModel m = load_model(path);
  rep.doc()["model_hash"] = model_hash(m);
  require_valid(m);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluctuation identities for upward skip-free Markov additive chains"};
  app.require_subcommand(1);
  std::string out_path, format = "json";
  std::uint64_t seed = 20240917;
  app.add_option("--out", out_path, "Write the report to FILE instead of stdout");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", seed, "Seed for stochastic commands");

  std::string model_path;
  double z = 1.0;
  auto add_model = [&](CLI::App* c) { c->add_option("MODEL", model_path, "Model JSON file")->required(); };

  auto* c_validate = app.add_subcommand("validate", "Check the model invariants");
  add_model(c_validate);

  auto* c_g = app.add_subcommand("solve-g", "Fundamental matrix G, occupation L and drift");
  add_model(c_g);
  double g_v = 0;
  c_g->add_option("--v", g_v, "Killing parameter override");

  auto* c_scale = app.add_subcommand("scale", "W scale table (and Z when --z is given)");
  add_model(c_scale);
  int nmax = 10;
  double scale_z = 0;
  c_scale->add_option("--nmax", nmax, "Largest index")->required()->check(CLI::NonNegativeNumber);
  c_scale->add_option("--z", scale_z, "Also emit Z(z, n) for n <= nmax");

  auto* c_exit = app.add_subcommand("exit", "Exit identities");
  std::string exit_kind;
  c_exit->add_option("KIND", exit_kind, "two-up, two-down or one-down")
      ->required()
      ->check(CLI::IsMember({"two-up", "two-down", "one-down"}));
  add_model(c_exit);
  int a = 1, b = 1, d = 0, x = 0;
  double v = 1.0;
  std::optional<double> kill;
  c_exit->add_option("--a", a, "Upper level");
  c_exit->add_option("--b", b, "Lower depth")->required();
  c_exit->add_option("--z", z, "Transform variable in (0,1]");
  c_exit->add_option("--v", kill, "Killing parameter override");

  auto* c_reflect = app.add_subcommand("reflect", "Reflection identities");
  std::string refl_kind;
  c_reflect->add_option("KIND", refl_kind, "one or two")->required()->check(CLI::IsMember({"one", "two"}));
  add_model(c_reflect);
  c_reflect->add_option("--a", a, "Upper level (one)");
  c_reflect->add_option("--b", b, "Reflection depth (one)");
  c_reflect->add_option("--d", d, "Strip depth (two)");
  c_reflect->add_option("--x", x, "Start level in [-d, 0] (two)");
  c_reflect->add_option("--z", z, "Transform variable in (0,1]");
  c_reflect->add_option("--v", kill, "Killing parameter override");

  auto* c_reg = app.add_subcommand("regulators", "Joint transform of both regulators");
  add_model(c_reg);
  c_reg->add_option("--d", d, "Strip depth")->required();
  c_reg->add_option("--x", x, "Start level in [-d, 0]")->required();
  c_reg->add_option("--z", z, "Lower regulator variable")->required();
  c_reg->add_option("--v", v, "Upper regulator variable")->required();

  auto* c_oracle = app.add_subcommand("oracle", "Exact strip solve or Monte-Carlo");
  std::string oracle_kind;
  c_oracle->add_option("KIND", oracle_kind, "strip or simulate")->required()->check(CLI::IsMember({"strip", "simulate"}));
  add_model(c_oracle);
  StripSpec spec;
  std::string payoff = "indicator", functional = "first-passage", reflection = "none";
  bool lower_refl = false, upper_refl = false, stop_on_upper = false;
  PathConfig cfg;
  int level = 1, stop_at = 1000;
  std::int64_t steps = 10000;
  c_oracle->add_option("--lower", spec.lower, "Lower barrier level");
  c_oracle->add_option("--upper", spec.upper, "Upper barrier level");
  c_oracle->add_option("--start", spec.start, "Start level");
  c_oracle->add_option("--payoff", payoff, "indicator, zpow, vtime or joint")
      ->check(CLI::IsMember({"indicator", "zpow", "vtime", "joint"}));
  c_oracle->add_option("--z", spec.z, "z weight");
  c_oracle->add_option("--v", spec.v, "v weight");
  c_oracle->add_flag("--lower-reflect", lower_refl, "Reflect at the lower barrier");
  c_oracle->add_flag("--upper-reflect", upper_refl, "Reflect at the upper barrier");
  c_oracle->add_option("--functional", functional, "strip, first-passage, first-visit, occupation, regulator, displacement")
      ->check(CLI::IsMember({"strip", "first-passage", "first-visit", "occupation", "regulator", "displacement"}));
  c_oracle->add_option("--paths", cfg.n_paths, "Paths per starting phase");
  c_oracle->add_option("--max-steps", cfg.max_steps, "Censoring horizon");
  c_oracle->add_option("--reflection", reflection, "none, lower or strip")->check(CLI::IsMember({"none", "lower", "strip"}));
  c_oracle->add_option("--depth", cfg.reflection.depth, "Reflection depth");
  c_oracle->add_option("--level", level, "Target level");
  c_oracle->add_option("--stop-at", stop_at, "Occupation stopping level");
  c_oracle->add_option("--steps", steps, "Displacement horizon");
  c_oracle->add_flag("--stop-on-upper", stop_on_upper, "Regulator functional stops at the first upper push");
  c_oracle->add_option("--kill-v", cfg.kill_v, "Killing parameter override");
  c_oracle->add_option("--start-level", cfg.start_level, "Start level for simulated paths");

  auto* c_verify = app.add_subcommand("verify", "Run the invariant suite");
  add_model(c_verify);
  VerifyOptions vopts;
  c_verify->add_option("--mc-paths", vopts.mc_paths, "Monte-Carlo paths per phase");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  json argv_json = json::array();
  for (int i = 0; i < argc; ++i) argv_json.push_back(argv[i]);
  Report rep(argv_json);
  const auto t0 = std::chrono::steady_clock::now();
  int code = 0;
  try {
    Diagnostics diag;
    if (c_validate->parsed()) {
      const MacModel m = load_model(model_path);
      rep.doc()["model_hash"] = model_hash(m);
      const ValidationReport vr = validate(m);
      rep.doc()["valid"] = vr.ok;
      json vs = json::array();
      for (const auto& viol : vr.violations) vs.push_back({{"block", viol.block}, {"row", viol.row}, {"rule", viol.rule}});
      rep.diagnostics()["violations"] = vs;
      if (!vr.ok) code = 1;
    } else if (c_g->parsed()) {
      MacModel m = load(model_path, rep);
      Params gp;
      if (g_v > 0) {
        m = m.with_kill(g_v);
        gp.v = g_v;
      }
      const SolveReport sr = solve_G(m);
      rep.add("G", sr.result, gp);
      rep.diagnostics()["iterations"] = sr.iterations;
      rep.diagnostics()["residual"] = sr.residual;
      const DriftInfo dr = drift(m);
      rep.diagnostics()["kappa_prime_1"] = dr.kappa_prime_1;
      rep.diagnostics()["drift"] = to_string(dr.classification);
      rep.diagnostics()["gamma"] = gamma_radius(m);
      if (m.kill_v < 1.0 || dr.classification != DriftClass::Oscillates) rep.add("L", occupation_L(m), gp);
    } else if (c_scale->parsed()) {
      const MacModel m = load(model_path, rep);
      const ScaleTable t(m, nmax);
      for (int k = 0; k <= nmax; ++k) {
        Params sp;
        sp.n = k;
        rep.add("W", t.w(k), sp);
      }
      if (scale_z > 0)
        for (int k = 0; k <= nmax; ++k) {
          Params sp;
          sp.n = k;
          sp.z = scale_z;
          rep.add("Z", z_matrix(t, scale_z, k), sp);
        }
      rep.warnings(t.warnings());
    } else if (c_exit->parsed()) {
      const MacModel m = load(model_path, rep);
      const ScaleTable t = table_for(ScaleTable(m, a + b), kill);
      Params ep;
      ep.b = b;
      ep.z = z;
      ep.v = t.kill_v();
      if (exit_kind == "two-up") {
        ep.a = a;
        ep.z.reset();
        rep.add("two_sided_up", two_sided_up(t, a, b, &diag), ep);
      } else if (exit_kind == "two-down") {
        ep.a = a;
        rep.add("two_sided_down", two_sided_down(t, a, b, z, &diag), ep);
      } else {
        const ScaleTable tb = table_for(ScaleTable(m, b), kill);
        rep.add("one_sided_down", one_sided_down(tb, b, z, &diag), ep);
      }
    } else if (c_reflect->parsed()) {
      const MacModel m = load(model_path, rep);
      Params rp;
      rp.z = z;
      if (refl_kind == "one") {
        const ScaleTable t = table_for(ScaleTable(m, a + b), kill);
        rp.a = a;
        rp.b = b;
        rp.v = t.kill_v();
        rep.add("one_sided_reflected_up", one_sided_reflected_up(t, a, b, z, &diag), rp);
      } else {
        const ScaleTable t = table_for(ScaleTable(m, d + 1), kill);
        rp.d = d;
        rp.x = x;
        rp.v = t.kill_v();
        rep.add("two_sided_reflection_pgf", two_sided_reflection_pgf(t, d, x, z, &diag), rp);
        rep.add("f_star", f_star(t, d + 1, z, &diag), rp);
      }
    } else if (c_reg->parsed()) {
      const MacModel m = load(model_path, rep);
      const ScaleTable t(m, d + 2);
      Params rp;
      rp.d = d;
      rp.x = x;
      rp.z = z;
      rp.v = v;
      rep.add("regulator_joint_transform", regulator_joint_transform(t, d, x, z, v, &diag), rp);
    } else if (c_oracle->parsed()) {
      const MacModel m = load(model_path, rep);
      spec.lower_barrier = lower_refl ? Barrier::Reflecting : Barrier::Absorbing;
      spec.upper_barrier = upper_refl ? Barrier::Reflecting : Barrier::Absorbing;
      spec.payoff = payoff == "zpow"    ? Payoff::ZPowerNegX
                    : payoff == "vtime" ? Payoff::VPowerTime
                    : payoff == "joint" ? Payoff::Joint
                                        : Payoff::Indicator;
      if (oracle_kind == "strip") {
        rep.add("strip", solve_strip(m, spec));
      } else {
        cfg.seed = seed;
        cfg.reflection.kind = reflection == "lower"   ? ReflectionKind::LowerAt
                              : reflection == "strip" ? ReflectionKind::Strip
                                                      : ReflectionKind::None;
        Functional f = StripExit{spec};
        if (functional == "first-passage") f = FirstPassageUp{level, spec.z};
        if (functional == "first-visit") f = FirstVisit{level, spec.lower, spec.upper};
        if (functional == "occupation") f = OccupationCount{level, stop_at};
        if (functional == "regulator") f = RegulatorJoint{spec.z, spec.v, stop_on_upper};
        if (functional == "displacement") f = Displacement{steps};
        const Estimate e = simulate(m, cfg, f);
        rep.add("mean", e.mean);
        rep.add("std_err", e.std_err);
        rep.diagnostics()["n_effective"] = e.n_effective;
        rep.diagnostics()["censored_fraction"] = e.censored_fraction;
        rep.diagnostics()["censoring_warning"] = e.censoring_warning;
        rep.diagnostics()["seed"] = e.seed;
      }
    } else if (c_verify->parsed()) {
      const MacModel m = load_model(model_path);
      rep.doc()["model_hash"] = model_hash(m);
      vopts.seed = seed;
      json props = json::array();
      bool all_ok = true;
      for (const auto& r : verify_model(m, vopts)) {
        props.push_back({{"property", r.name},
                         {"anchor", r.anchor},
                         {"status", r.skipped ? "skipped" : (r.passed ? "pass" : "FAIL")},
                         {"value", r.value},
                         {"tolerance", r.tolerance},
                         {"detail", r.detail}});
        if (!r.skipped && !r.passed) all_ok = false;
        std::cerr << (r.skipped ? "SKIP " : (r.passed ? "PASS " : "FAIL ")) << r.name << "  (" << r.anchor << ")"
                  << (r.detail.empty() ? "" : "  " + r.detail) << "\n";
      }
      rep.doc()["properties"] = props;
      if (!all_ok) code = validate(m).ok ? 2 : 1;
    }
    rep.warnings(diag.warnings);
    rep.doc()["status"] = code == 0 ? "ok" : "failed";
  } catch (const ValidationError& e) {
    rep.doc()["status"] = "error";
    rep.doc()["error"] = e.what();
    std::cerr << "validation error: " << e.what() << "\n";
    code = 1;
  } catch (const std::exception& e) {
    rep.doc()["status"] = "error";
    rep.doc()["error"] = e.what();
    std::cerr << "error: " << e.what() << "\n";
    code = 2;
  }
  rep.doc()["timing_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const std::string text = rep.render(format);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return 3;
    }
    out << text;
  }
  return code;
}
