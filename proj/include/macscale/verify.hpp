#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "macscale/model.hpp"

namespace macscale {

struct PropertyResult {
  std::string name;
  std::string anchor;   // short statement of the identity being checked
  bool passed = false;
  bool skipped = false; // precondition not met for this model
  double value = 0.0;   // observed error or statistic
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 20240917;
  std::int64_t mc_paths = 20000;
  int max_level = 4;  // a, b, d range for oracle comparisons
};

// Runs every invariant applicable to the model.
std::vector<PropertyResult> verify_model(const MacModel& model, const VerifyOptions& opts = {});

}  // namespace macscale
