#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "macscale/oracle.hpp"

namespace macscale {
namespace {

constexpr std::int64_t kBlock = 4096;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Outcome table per phase: (jump, next phase) pairs with cumulative weights.
class StepSampler {
 public:
  explicit StepSampler(const std::vector<const PhaseMatrix*>& blocks_by_jump, int top_jump)
      : n_(static_cast<int>(blocks_by_jump.front()->rows())) {
    cum_.resize(n_);
    outcomes_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      double acc = 0.0;
      for (std::size_t b = 0; b < blocks_by_jump.size(); ++b) {
        for (int j = 0; j < n_; ++j) {
          const double p = (*blocks_by_jump[b])(i, j);
          if (p <= 0.0) continue;
          acc += p;
          cum_[i].push_back(acc);
          outcomes_[i].push_back({top_jump - static_cast<int>(b), j});
        }
      }
    }
  }

  // Returns (jump, next phase); u in [0,1). Rows sum to one up to rounding,
  // so u is scaled by the row total.
  std::pair<int, int> draw(int phase, double u) const {
    const auto& c = cum_[phase];
    const auto it = std::upper_bound(c.begin(), c.end(), u * c.back());
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - c.begin()), c.size() - 1);
    return outcomes_[phase][k];
  }

 private:
  int n_;
  std::vector<std::vector<double>> cum_;
  std::vector<std::vector<std::pair<int, int>>> outcomes_;
};

StepSampler mac_sampler(const MacModel& m) {
  std::vector<const PhaseMatrix*> b{&m.a_up};
  for (const auto& a : m.a_down) b.push_back(&a);
  return StepSampler(b, 1);
}

struct PathResult {
  bool censored = false;
};

// Per-path accumulator of the contribution row.
struct Row {
  std::vector<double> v;
  explicit Row(int n) : v(static_cast<std::size_t>(n), 0.0) {}
  void reset() { std::fill(v.begin(), v.end(), 0.0); }
};

struct BlockSums {
  std::vector<double> sum, sumsq;
  std::int64_t censored = 0;
};

struct Evaluator {
  const MacModel& model;
  const PathConfig& cfg;
  const StepSampler& sampler;
  double kill;

  bool survives(PathRng& rng) const { return kill >= 1.0 || rng.uniform() < kill; }

  PathResult run(const StripExit& f, int phase, PathRng& rng, Row& out) const {
    const StripSpec& s = f.spec;
    const bool lower_refl = s.lower_barrier == Barrier::Reflecting;
    const bool upper_refl = s.upper_barrier == Barrier::Reflecting;
    const bool timed = s.payoff == Payoff::VPowerTime || s.payoff == Payoff::Joint;
    const bool down_pay = s.payoff == Payoff::ZPowerNegX || s.payoff == Payoff::Joint;
    std::int64_t x = s.start;
    double w = 1.0;
    for (std::int64_t n = 0; n < cfg.max_steps; ++n) {
      if (!survives(rng)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      x += jump;
      if (timed) w *= s.v;
      if (upper_refl && x > s.upper) {
        w *= std::pow(s.v, static_cast<double>(x - s.upper));
        x = s.upper;
      }
      if (lower_refl && x < s.lower) {
        w *= std::pow(s.z, static_cast<double>(s.lower - x));
        x = s.lower;
      }
      if (!upper_refl && x >= s.upper) {
        if (s.payoff == Payoff::Indicator || s.payoff == Payoff::VPowerTime) out.v[phase] = w;
        return {};
      }
      if (!lower_refl && x <= s.lower) {
        if (down_pay)
          out.v[phase] = w * std::pow(s.z, static_cast<double>(-x));
        else if (s.payoff == Payoff::VPowerTime)
          out.v[phase] = w;
        return {};
      }
    }
    return {true};
  }

  PathResult run(const FirstPassageUp& f, int phase, PathRng& rng, Row& out) const {
    const Reflection& r = cfg.reflection;
    if (r.kind == ReflectionKind::Strip) throw DomainError("FirstPassageUp takes None or LowerAt reflection");
    std::int64_t x = cfg.start_level;
    std::int64_t r_minus = 0;
    for (std::int64_t n = 0; n < cfg.max_steps; ++n) {
      if (!survives(rng)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      x += jump;
      if (r.kind == ReflectionKind::LowerAt && x < -r.depth) {
        r_minus += -r.depth - x;
        x = -r.depth;
      }
      if (x >= f.level) {
        out.v[phase] = std::pow(f.z, static_cast<double>(r_minus));
        return {};
      }
    }
    return {true};
  }

  PathResult run(const FirstVisit& f, int phase, PathRng& rng, Row& out) const {
    std::int64_t x = cfg.start_level;
    for (std::int64_t n = 0; n < cfg.max_steps; ++n) {
      if (!survives(rng)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      x += jump;
      if (x == f.level) {
        out.v[phase] = 1.0;
        return {};
      }
      if (x < f.lower || x > f.upper) return {};
    }
    return {true};
  }

  PathResult run(const OccupationCount& f, int phase, PathRng& rng, Row& out) const {
    std::int64_t x = cfg.start_level;
    if (x == f.level) out.v[phase] += 1.0;
    for (std::int64_t n = 0; n < cfg.max_steps; ++n) {
      if (!survives(rng)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      x += jump;
      if (x >= f.stop_at) return {};
      if (x == f.level) out.v[phase] += 1.0;
    }
    return {true};
  }

  PathResult run(const RegulatorJoint& f, int phase, PathRng& rng, Row& out) const {
    if (cfg.reflection.kind != ReflectionKind::Strip) throw DomainError("RegulatorJoint needs Strip reflection");
    const std::int64_t d = cfg.reflection.depth;
    std::int64_t h = cfg.start_level, rp = 0, rm = 0;
    for (std::int64_t n = 0; n < cfg.max_steps; ++n) {
      if (!survives(rng)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      h += jump;
      bool stop = false;
      if (h > 0) {
        rp += h;
        h = 0;
        stop = f.stop_on_upper;
      } else if (h < -d) {
        rm += -d - h;
        h = -d;
        stop = !f.stop_on_upper;
      }
      if (stop) {
        out.v[phase] = std::pow(f.v, static_cast<double>(rp)) * std::pow(f.z, static_cast<double>(rm));
        return {};
      }
    }
    return {true};
  }

  PathResult run(const Displacement& f, int phase, PathRng& rng, Row& out) const {
    std::int64_t x = 0;
    for (std::int64_t n = 0; n < f.steps; ++n) {
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      x += jump;
    }
    out.v[phase] = static_cast<double>(x) / static_cast<double>(f.steps);
    return {};
  }
};

template <class PathFn>
Estimate run_paths(int n, const PathConfig& cfg, PathFn&& path) {
  if (cfg.n_paths < 2) throw DomainError("simulate: n_paths must be >= 2");
  const std::int64_t blocks_per_row = (cfg.n_paths + kBlock - 1) / kBlock;
  const std::int64_t items = blocks_per_row * n;
  std::vector<BlockSums> sums(static_cast<std::size_t>(items));
  std::atomic<std::int64_t> next{0};

  auto worker = [&]() {
    Row row(n);
    for (;;) {
      const std::int64_t item = next.fetch_add(1);
      if (item >= items) return;
      const int phase = static_cast<int>(item / blocks_per_row);
      const std::int64_t b = item % blocks_per_row;
      BlockSums& bs = sums[static_cast<std::size_t>(item)];
      bs.sum.assign(n, 0.0);
      bs.sumsq.assign(n, 0.0);
      const std::int64_t first = b * kBlock, last = std::min(cfg.n_paths, first + kBlock);
      for (std::int64_t p = first; p < last; ++p) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(phase) * static_cast<std::uint64_t>(cfg.n_paths) +
                                  static_cast<std::uint64_t>(p));
        row.reset();
        if (path(phase, rng, row).censored) ++bs.censored;
        for (int j = 0; j < n; ++j) {
          bs.sum[j] += row.v[j];
          bs.sumsq[j] += row.v[j] * row.v[j];
        }
      }
    }
  };

  const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(cfg.threads), items));
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 1; w < workers; ++w)
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next.store(items);
      }
    });
  try {
    worker();
  } catch (...) {
    std::lock_guard<std::mutex> lock(err_mu);
    if (!err) err = std::current_exception();
    next.store(items);
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);

  // Reduction in fixed block order: identical bits for any worker count.
  const std::size_t nn = static_cast<std::size_t>(n);
  Estimate e;
  e.mean = PhaseMatrix(nn, nn);
  e.std_err = PhaseMatrix(nn, nn);
  e.n_effective = cfg.n_paths;
  e.seed = cfg.seed;
  std::int64_t censored = 0;
  const double np = static_cast<double>(cfg.n_paths);
  for (int i = 0; i < n; ++i) {
    std::vector<double> s(nn, 0.0), sq(nn, 0.0);
    for (std::int64_t b = 0; b < blocks_per_row; ++b) {
      const BlockSums& bs = sums[static_cast<std::size_t>(i * blocks_per_row + b)];
      censored += bs.censored;
      for (std::size_t j = 0; j < nn; ++j) {
        s[j] += bs.sum[j];
        sq[j] += bs.sumsq[j];
      }
    }
    for (std::size_t j = 0; j < nn; ++j) {
      const double mean = s[j] / np;
      const double var = std::max(0.0, (sq[j] - np * mean * mean) / (np - 1.0));
      e.mean(i, j) = mean;
      e.std_err(i, j) = std::sqrt(var / np);
    }
  }
  e.censored_fraction = static_cast<double>(censored) / (np * n);
  e.censoring_warning = e.censored_fraction > 0.01;
  return e;
}

}  // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream)
    : state_(mix64(seed ^ 0x6A09E667F3BCC909ULL) ^ mix64(stream + 0x632BE59BD9B4E019ULL)) {}

std::uint64_t PathRng::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  return mix64(state_);
}

double PathRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int worker_count(int requested) {
  if (requested > 0) return requested;
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("MACSCALE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) hw = std::min(hw, cap);
  }
  return hw;
}

Estimate simulate(const MacModel& model, const PathConfig& cfg, const Functional& f) {
  require_valid(model);
  const double kill = cfg.kill_v.value_or(model.kill_v);
  if (!(kill > 0.0 && kill <= 1.0)) throw DomainError("simulate: kill_v must lie in (0,1]");
  if (cfg.max_steps < 1) throw DomainError("simulate: max_steps must be >= 1");
  if (std::holds_alternative<StripExit>(f) && cfg.reflection.kind != ReflectionKind::None)
    throw DomainError("StripExit carries its own barriers; use reflection None");
  if (const auto* se = std::get_if<StripExit>(&f)) {
    const auto& s = se->spec;
    if (s.lower >= s.upper || s.start <= s.lower - (s.lower_barrier == Barrier::Reflecting ? 1 : 0) ||
        s.start >= s.upper + (s.upper_barrier == Barrier::Reflecting ? 1 : 0))
      throw DomainError("StripExit: start must be a transient level");
    if (s.lower_barrier == Barrier::Reflecting && s.upper_barrier == Barrier::Reflecting)
      throw DomainError("StripExit needs an absorbing barrier");
  }
  const StepSampler sampler = mac_sampler(model);
  const Evaluator ev{model, cfg, sampler, kill};
  return run_paths(model.n_phases, cfg, [&](int phase, PathRng& rng, Row& row) {
    return std::visit([&](const auto& fn) { return ev.run(fn, phase, rng, row); }, f);
  });
}

Trajectory simulate_path(const MacModel& model, const PathConfig& cfg, int start_phase,
                         std::int64_t path_index, std::int64_t steps) {
  require_valid(model);
  if (start_phase < 0 || start_phase >= model.n_phases) throw DomainError("simulate_path: bad start phase");
  const double kill = cfg.kill_v.value_or(model.kill_v);
  const StepSampler sampler = mac_sampler(model);
  PathRng rng(cfg.seed, static_cast<std::uint64_t>(start_phase) * static_cast<std::uint64_t>(cfg.n_paths) +
                            static_cast<std::uint64_t>(path_index));
  Trajectory t;
  std::int64_t x = cfg.start_level, h = cfg.start_level, rp = 0, rm = 0;
  int phase = start_phase;
  auto record = [&] {
    t.level.push_back(x);
    t.phase.push_back(phase);
    t.reflected.push_back(h);
    t.r_plus.push_back(rp);
    t.r_minus.push_back(rm);
  };
  record();
  const Reflection& r = cfg.reflection;
  for (std::int64_t n = 0; n < steps; ++n) {
    if (kill < 1.0 && !(rng.uniform() < kill)) {
      t.killed = true;
      break;
    }
    auto [jump, next] = sampler.draw(phase, rng.uniform());
    phase = next;
    x += jump;
    h += jump;
    if (r.kind == ReflectionKind::Strip && h > 0) {
      rp += h;
      h = 0;
    }
    if (r.kind != ReflectionKind::None && h < -r.depth) {
      rm += -r.depth - h;
      h = -r.depth;
    }
    record();
  }
  return t;
}

Estimate simulate_first_increase(const std::vector<PhaseMatrix>& blocks, double v, double z,
                                 const PathConfig& cfg) {
  if (blocks.size() < 2) throw DomainError("simulate_first_increase: need blocks for jumps 0 and >= 1");
  const int top = static_cast<int>(blocks.size()) - 1;
  std::vector<const PhaseMatrix*> by_jump;
  for (int k = top; k >= 0; --k) by_jump.push_back(&blocks[static_cast<std::size_t>(k)]);
  const StepSampler sampler(by_jump, top);
  const int n = static_cast<int>(blocks[0].rows());
  return run_paths(n, cfg, [&](int phase, PathRng& rng, Row& row) -> PathResult {
    for (std::int64_t s = 0; s < cfg.max_steps; ++s) {
      if (v < 1.0 && !(rng.uniform() < v)) return {};
      auto [jump, next] = sampler.draw(phase, rng.uniform());
      phase = next;
      if (jump > 0) {
        row.v[phase] = std::pow(z, static_cast<double>(jump));
        return {};
      }
    }
    return {true};
  });
}

}  // namespace macscale
