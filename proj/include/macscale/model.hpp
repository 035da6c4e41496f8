#pragma once

#include <string>
#include <vector>

#include "macscale/matrix.hpp"

namespace macscale {

// Upward skip-free Markov additive chain. Blocks are the unkilled one-step
// probabilities; killing enters analytically through kill_v.
struct MacModel {
  int n_phases = 0;
  PhaseMatrix a_up;                  // level +1
  std::vector<PhaseMatrix> a_down;   // levels 0, -1, ..., -M
  double kill_v = 1.0;

  int max_down_jump() const { return static_cast<int>(a_down.size()) - 1; }

  // Block for a level change of `jump` in [-M, 1].
  const PhaseMatrix& block(int jump) const;

  MacModel with_kill(double v) const;
};

struct Violation {
  std::string block;  // "A1", "A0", "A-2", "kill_v", "model"
  int row = -1;
  std::string rule;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

ValidationReport validate(const MacModel& model);

// Throws ValidationError listing the violations.
void require_valid(const MacModel& model);

// kill_v * sum_{m=-1}^{M} z^m A_{-m}
PhaseMatrix eval_F(const MacModel& model, double z);

// Unkilled phase transition matrix P = sum of blocks.
PhaseMatrix transition_matrix(const MacModel& model);

bool is_irreducible(const PhaseMatrix& p);

std::vector<double> stationary(const MacModel& model);

enum class DriftClass { DriftsUp, DriftsDown, Oscillates };

struct DriftInfo {
  double kappa_prime_1 = 0.0;
  DriftClass classification = DriftClass::Oscillates;
};

// Asymptotic drift of the unkilled chain: X_n / n -> -kappa_prime_1.
DriftInfo drift(const MacModel& model);

std::string to_string(DriftClass c);

// Perron-Frobenius data of the unkilled F(z); the killed eigenvalue is kill_v * kappa.
// Normalised so that left.right = 1 and pi.right = 1.
struct SpectralData {
  double z = 1.0;
  double kappa = 0.0;
  std::vector<double> left;
  std::vector<double> right;
  int iterations = 0;
  bool used_fallback = false;
};

SpectralData perron(const MacModel& model, double z);

}  // namespace macscale
