#pragma once

#include <string>

#include "squat/model.hpp"

namespace squat {

struct CheckpointMeta {
  Task task = Task::kPredCls;
  std::uint64_t seed = 0;
  long iteration = 0;
  // Effective run configuration as a JSON document; embedded verbatim so
  // every artifact records how it was produced. May be empty.
  std::string config_echo;
};

// JSON manifest: architecture config + metadata + every parameter tensor as
// a named flat array. Doubles keep full round-trip precision, so a loaded
// model reproduces the saved model's outputs bitwise.
void save_checkpoint(const std::string& path, const ModelParams& params, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  ModelParams params;
  CheckpointMeta meta;
};

// Throws DataError naming the first missing, unknown, or shape-mismatched
// parameter.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace squat
