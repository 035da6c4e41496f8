#pragma once

#include <cstdint>

#include "macscale/model.hpp"

namespace macscale::catalog {

// Two-phase desk model used throughout the tests and docs.
MacModel model_a(double kill_v = 1.0);

// Simple walk: up with probability p, down one level with q, stay otherwise.
MacModel scalar_walk(double p, double q, double kill_v = 1.0);

enum class DriftBias { Up, Down, Mixed };

// Dense random model: each row puts 70% of its upward mass on the diagonal of
// A1 (keeps A1 well conditioned); the rest is Dirichlet-distributed. Fully
// determined by (seed, index); uses no implementation-defined distributions.
MacModel random_model(std::uint64_t seed, std::uint64_t index, int n_phases, int max_down,
                      DriftBias bias, double kill_v = 1.0);

}  // namespace macscale::catalog
