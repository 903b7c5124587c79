#pragma once

#include <cstdint>
#include <string>

#include "listpl/ranker_net.hpp"
#include "listpl/types.hpp"

namespace listpl {

/// Self-describing model container: architecture dimensions, 64-bit
/// parameter arrays, the run's rng seed and optimizer step count.
struct Checkpoint {
  ModelParams<double> params;
  std::uint64_t seed = 0;
  Index step_count = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws DataError on missing file, wrong container format, or unknown
/// version.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace listpl
