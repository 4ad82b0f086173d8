#pragma once

#include <cstdint>
#include <filesystem>

#include "imti/manifest.hpp"
#include "imti/stft.hpp"

namespace imti {

struct SynthConfig {
  std::size_t n_train = 24;
  std::size_t n_val = 8;
  std::size_t n_test = 8;
  std::size_t embedding_dim = 8;
  std::size_t t_min = 30;  // embedding frames
  std::size_t t_max = 60;
  std::uint64_t seed = 1;

  void validate() const;
};

// Writes manifest.jsonl plus one .emb and one .wav per utterance. A latent
// clarity value per utterance drives the embedding entropy, the waveform
// tone-to-noise balance, and all four labels, so the corpus carries real
// signal for the model to find. Byte-identical for equal seeds. The
// waveform is sized to 2x the embedding frame count under stft_cfg so the
// two streams exercise frame alignment.
void synth_dataset(const SynthConfig& cfg, const StftConfig& stft_cfg,
                   const std::filesystem::path& out_dir);

}  // namespace imti
