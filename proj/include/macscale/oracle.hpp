#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "macscale/model.hpp"

namespace macscale {

// ---- exact strip solver -------------------------------------------------

enum class Payoff {
  Indicator,   // 1 on absorption at `upper`
  ZPowerNegX,  // z^{-X_tau} on absorption at or below `lower`
  VPowerTime,  // v^tau on absorption at either side
  Joint,       // v^tau z^{-X_tau} on absorption below
};

enum class Barrier { Absorbing, Reflecting };

// Levels are absolute; the chain starts at `start`. An absorbing lower
// barrier stops the chain at X <= lower, a reflecting one pushes it back to
// `lower` weighting each unit pushed by z. An absorbing upper barrier stops at
// X = upper, a reflecting one clips at `upper` weighting each unit by v.
// Killing by the model's kill_v always applies.
struct StripSpec {
  int lower = -1;
  int upper = 1;
  int start = 0;
  Payoff payoff = Payoff::Indicator;
  double z = 1.0;
  double v = 1.0;
  Barrier lower_barrier = Barrier::Absorbing;
  Barrier upper_barrier = Barrier::Absorbing;
};

constexpr std::int64_t kStripStateGuard = 1000000;

// Row i: expectation started in phase i; column j: phase at absorption.
PhaseMatrix solve_strip(const MacModel& model, const StripSpec& spec);

// E(v^tau; J_tau) for the first visit of `level` (exact hit, either
// direction), computed on a truncated range [lower, upper] outside which
// paths are dropped.
PhaseMatrix solve_first_visit(const MacModel& model, int level, int lower, int upper);

// Lower truncation depth for one-sided problems: 40 / (1 - rho(A0)), at least 40.
int lower_truncation_depth(const MacModel& model);

// Re-solves with doubled truncation depth until two successive results agree
// to tol; throws DomainError once the state guard would be exceeded.
PhaseMatrix deepen(const std::function<PhaseMatrix(int)>& solve, int depth, double tol = 1e-14);

// ---- Monte-Carlo ----------------------------------------------------------

enum class ReflectionKind { None, LowerAt, Strip };

// LowerAt: reflect at -depth; Strip: reflect into [-depth, 0].
struct Reflection {
  ReflectionKind kind = ReflectionKind::None;
  int depth = 0;
};

struct PathConfig {
  std::int64_t n_paths = 100000;  // per starting phase
  std::uint64_t seed = 1;
  std::int64_t max_steps = 1000000;
  Reflection reflection;
  std::optional<double> kill_v;  // defaults to the model's
  int start_level = 0;
  int threads = 0;               // 0: MACSCALE_THREADS or hardware concurrency
};

// Same stopping and payoff rules as solve_strip; cfg.reflection must be None.
struct StripExit {
  StripSpec spec;
};

// Phase at the first time the level reaches `level` from below (X >= level).
// The payoff is z^{R^-} so that with LowerAt reflection it is the
// regulator transform; with no reflection it is the hitting distribution.
struct FirstPassageUp {
  int level = 1;
  double z = 1.0;
};

// Phase at the first visit of `level`; paths leaving [lower, upper] are dropped.
struct FirstVisit {
  int level = -1;
  int lower = -1000;
  int upper = 1000;
};

// Visits to `level` before the level first reaches `stop_at` from below.
struct OccupationCount {
  int level = 0;
  int stop_at = 1000;
};

// Strip reflection: stop at the first increase of the chosen regulator and pay
// v^{R^+} z^{R^-}. stop_on_upper=true gives the lower-regulator transform
// at rho_0; false gives the joint transform at the first passage below -(d+1).
struct RegulatorJoint {
  double z = 1.0;
  double v = 1.0;
  bool stop_on_upper = false;
};

// X_steps / steps, unkilled.
struct Displacement {
  std::int64_t steps = 10000;
};

using Functional =
    std::variant<StripExit, FirstPassageUp, FirstVisit, OccupationCount, RegulatorJoint, Displacement>;

struct Estimate {
  PhaseMatrix mean;
  PhaseMatrix std_err;
  std::int64_t n_effective = 0;  // paths per row
  double censored_fraction = 0.0;
  bool censoring_warning = false;  // censored on more than 1% of paths
  std::uint64_t seed = 0;
};

Estimate simulate(const MacModel& model, const PathConfig& cfg, const Functional& f);

// Single trajectory for per-step invariant checks.
struct Trajectory {
  std::vector<std::int64_t> level;     // X_n
  std::vector<int> phase;              // J_n
  std::vector<std::int64_t> reflected; // H_n
  std::vector<std::int64_t> r_plus;
  std::vector<std::int64_t> r_minus;
  bool killed = false;
};

Trajectory simulate_path(const MacModel& model, const PathConfig& cfg, int start_phase,
                         std::int64_t path_index, std::int64_t steps);

// First strict increase of a MAC with nonnegative jumps: blocks[k] is the
// one-step block for a jump of +k. Pays v^eta z^{X_eta - X_0}.
Estimate simulate_first_increase(const std::vector<PhaseMatrix>& blocks, double v, double z,
                                 const PathConfig& cfg);

// Uniform stream for one path, derived from (seed, stream index).
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next();
  double uniform();  // [0, 1)

 private:
  std::uint64_t state_;
};

int worker_count(int requested);

}  // namespace macscale
