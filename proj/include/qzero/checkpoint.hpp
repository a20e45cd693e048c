#pragma once

#include <filesystem>
#include <optional>

#include "qzero/ggnn.hpp"

namespace qzero {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  GgnnParams params;
  std::optional<OptimState> opt;
};

// Versioned binary container (see docs/checkpoint_format.md for the byte
// layout). Round trips are bit-exact; load rejects bad magic, unknown
// versions, and any tensor whose name or shape disagrees with the stored
// config.
void save_checkpoint(const std::filesystem::path& path, const GgnnParams& params,
                     const OptimState* opt = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace qzero
