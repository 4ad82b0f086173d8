#pragma once

#include <cstddef>
#include <vector>

#include "imti/embedding.hpp"

namespace imti {

// Summary of one embedding frame: mean and population standard deviation
// over the embedding dimension, and the entropy of softmax(e) in nats.
struct FrameStats {
  double mu = 0.0;
  double sigma = 0.0;    // >= 0
  double entropy = 0.0;  // [0, ln D]
};

FrameStats frame_stats(const double* e, std::size_t d);
FrameStats frame_stats(const std::vector<double>& e);

// Rows are [e_t ; mu_t ; sigma_t ; entropy_t]: the embedding passes through
// unchanged in columns 0..D-1, the three statistics sit in D..D+2.
struct AugmentedFeatureSequence {
  Matrix frames;  // [T x (D+3)]
  std::size_t embedding_dim = 0;
};

AugmentedFeatureSequence augment_sequence(const EmbeddingSequence& e);

}  // namespace imti
