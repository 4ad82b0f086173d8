#pragma once

#include <filesystem>

#include "imti/tensor.hpp"

namespace imti {

// Per-frame embedding matrix, one row per frame.
struct EmbeddingSequence {
  Matrix frames;  // [T x D]

  std::size_t frame_count() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }

  // T >= 1, D >= 2, all values finite.
  void validate() const;
};

// EMB1 container: magic "EMB1", then little-endian u32 version (= 1),
// u32 frame count T, u32 dimension D, then T*D float32 values frame-major.
EmbeddingSequence load_embedding(const std::filesystem::path& path);
void save_embedding(const std::filesystem::path& path, const Matrix& frames);

}  // namespace imti
