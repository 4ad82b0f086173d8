#pragma once

#include <filesystem>
#include <vector>

#include "imti/embedding.hpp"
#include "imti/manifest.hpp"
#include "imti/network.hpp"
#include "imti/stats.hpp"
#include "imti/stft.hpp"
#include "imti/wave.hpp"

namespace imti {

// One utterance with every fixed (parameter-independent) stage precomputed:
// augmented embedding statistics and the magnitude spectrogram. Only the
// learnable filterbank is recomputed per step.
struct UtteranceData {
  std::string id;
  Split split = Split::train;
  Waveform wave;
  AugmentedFeatureSequence aug;
  Matrix stft_mag;
  TargetScores targets;
};

struct Dataset {
  std::vector<UtteranceData> items;
  std::size_t embedding_dim = 0;

  std::vector<std::size_t> split_indices(Split s) const;
};

// Loads every manifest entry. All utterances must agree on the embedding
// dimension. require_waveforms: the training pipeline cannot run without
// the acoustic stream; prediction-only flows may relax this in the future,
// so it stays a flag.
Dataset load_dataset(const std::filesystem::path& manifest_path, const StftConfig& stft_cfg,
                     bool require_waveforms = true);

}  // namespace imti
