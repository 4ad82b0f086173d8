#pragma once

#include <filesystem>
#include <string>

#include "imti/gradcheck.hpp"
#include "imti/params.hpp"
#include "imti/synth.hpp"
#include "imti/trainer.hpp"

namespace imti {

// Everything a run can configure, parsed from key=value lines. Unknown keys
// are rejected so typos fail loudly instead of silently using defaults.
struct RunConfig {
  ModelConfig model;  // embedding_dim 0 means "infer from the data"
  TrainConfig train;
  SynthConfig synth;
  GradCheckOptions gradcheck;
};

RunConfig default_run_config();

RunConfig parse_run_config_text(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::filesystem::path& path);

// Full dump, every key present, fixed order; parsing it back round-trips.
std::string render_run_config(const RunConfig& cfg);
void write_effective_config(const std::filesystem::path& path, const RunConfig& cfg);

// The model section alone; stored inside checkpoints.
std::string render_model_config(const ModelConfig& cfg);
ModelConfig parse_model_config_text(const std::string& text, const std::string& origin);

}  // namespace imti
