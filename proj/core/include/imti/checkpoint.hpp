#pragma once

#include <filesystem>
#include <optional>

#include "imti/adam.hpp"
#include "imti/params.hpp"

namespace imti {

// Binary container: magic "IMTN", u32 version, a model-config text section,
// the named parameter blocks with shapes, and optionally optimizer state.
// All integers little-endian, payloads float64.
struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
  std::optional<OptimizerState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace imti
