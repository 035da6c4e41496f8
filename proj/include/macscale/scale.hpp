#pragma once

#include <string>
#include <vector>

#include "macscale/model.hpp"

namespace macscale {

// W_v(0..n_max) for a fixed model and killing. Values are held in quad and
// one extra term W(n_max+1) is kept so Z can use its polynomial form at n_max.
class ScaleTable {
 public:
  ScaleTable(MacModel model, int n_max);

  const MacModel& model() const { return model_; }
  double kill_v() const { return model_.kill_v; }
  int n_max() const { return n_max_; }
  const std::string& model_id() const { return model_id_; }

  PhaseMatrix w(int n) const;
  const QMatrix& w_q(int n) const;   // valid for n <= n_max + 1
  // Killed blocks [vA1, vA0, vA-1, ..., vA-M] in quad.
  const std::vector<QMatrix>& blocks_q() const { return blocks_; }
  double condition(int n) const;     // inf-norm condition number of W(n), n >= 1
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  MacModel model_;
  int n_max_;
  std::string model_id_;
  std::vector<QMatrix> blocks_;
  std::vector<QMatrix> w_;
  std::vector<double> cond_;
  std::vector<std::string> warnings_;
};

ScaleTable w_sequence(const MacModel& model, int n_max);

// z^{-n}[I + sum_{k=0}^{n} z^k W(k)(I - vF(z))]
PhaseMatrix z_matrix(const ScaleTable& table, double z, int n);

// Smallest eigenvalue modulus of G_v.
double gamma_radius(const MacModel& model);

// inf-norm of (vF(z) - I) S - I (left) or S (vF(z) - I) - I (right) with
// S = sum_{n=0}^{terms} z^n W(n).
double transform_residual(const ScaleTable& table, double z, int terms, bool right_side = false);

// Stable hash of the model content, used as model_id and in reports.
std::string model_hash(const MacModel& model);

namespace detail {

QMatrix eval_F_q(const std::vector<QMatrix>& blocks, quad z);
QMatrix z_matrix_q(const ScaleTable& table, quad z, int n);

}  // namespace detail
}  // namespace macscale
