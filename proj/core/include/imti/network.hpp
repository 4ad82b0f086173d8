#pragma once

#include <array>

#include "imti/align.hpp"
#include "imti/layers.hpp"
#include "imti/manifest.hpp"
#include "imti/params.hpp"
#include "imti/sinc.hpp"
#include "imti/stats.hpp"
#include "imti/wave.hpp"

namespace imti {

// Regression targets in model order: intelligibility, inverted whisper CER,
// inverted google CER, STOI. All in [0, 1].
struct TargetScores {
  std::array<double, 4> y = {};

  double operator[](std::size_t i) const { return y[i]; }
  static TargetScores from_entry(const ManifestEntry& e);
};

struct PredictionBundle {
  std::array<BranchOutput, 4> targets;

  // Finite scores; utterance equals the frame mean to 1e-12.
  void validate() const;
};

struct ModelCache {
  std::size_t t_steps = 0;  // aligned sequence length
  SincCache sinc;
  CnnCache cnn;
  AffineReluCache adapter, fc;
  std::vector<std::size_t> adapter_idx, cnn_idx;  // aligned row -> source row
  Matrix rec_in;                                  // [T x (A + d_c)]
  BiSlstmCache rec_slstm;
  BiLstmCache rec_lstm;
  std::array<BranchCache, 4> branches;
};

// Full pipeline for one utterance. stft_mag is the precomputed magnitude
// spectrogram of w under cfg.stft; the filterbank runs in here because its
// cutoffs are learnable.
PredictionBundle model_forward(const Waveform& w, const Matrix& stft_mag,
                               const AugmentedFeatureSequence& aug, const ParameterSet& p,
                               const ModelConfig& cfg, ModelCache* cache = nullptr);

// Backward from per-target frame-score gradients; accumulates every
// parameter gradient (filterbank cutoffs included) into grads.
void model_backward(const Waveform& w, const ParameterSet& p, const ModelConfig& cfg,
                    const ModelCache& cache, const std::array<std::vector<double>, 4>& d_frames,
                    ParameterSet& grads);

}  // namespace imti
