#include "imti/stats.hpp"

#include <algorithm>
#include <cmath>

#include "imti/common.hpp"

namespace imti {

FrameStats frame_stats(const double* e, std::size_t d) {
  if (d < 2) throw ValidationError(strf("frame_stats: dimension %zu, need at least 2", d));
  const double dd = static_cast<double>(d);

  FrameStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) sum += e[i];
  s.mu = sum / dd;

  // Population variance (divide by D, not D-1); sqrt clamped against
  // cancellation pushing the sum a hair below zero.
  double sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double c = e[i] - s.mu;
    sq += c * c;
  }
  s.sigma = std::sqrt(std::max(0.0, sq / dd));

  // Softmax entropy, max-subtracted. H = log(Z) - dot/Z in nats, with
  // dot = sum w_i * (e_i - max), w_i = exp(e_i - max); 0 * log 0 terms
  // vanish because w_i > 0 always. Clamped to the valid range [0, log D]
  // to absorb last-bit roundoff.
  const double mx = *std::max_element(e, e + d);
  double z = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double a = e[i] - mx;
    const double w = std::exp(a);
    z += w;
    dot += w * a;
  }
  s.entropy = std::clamp(std::log(z) - dot / z, 0.0, std::log(dd));
  return s;
}

FrameStats frame_stats(const std::vector<double>& e) { return frame_stats(e.data(), e.size()); }

AugmentedFeatureSequence augment_sequence(const EmbeddingSequence& e) {
  e.validate();
  const std::size_t t_len = e.frame_count();
  const std::size_t d = e.dim();

  AugmentedFeatureSequence out;
  out.embedding_dim = d;
  out.frames = Matrix(t_len, d + 3);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* src = e.frames.row(t);
    double* dst = out.frames.row(t);
    std::copy(src, src + d, dst);
    const FrameStats s = frame_stats(src, d);
    dst[d] = s.mu;
    dst[d + 1] = s.sigma;
    dst[d + 2] = s.entropy;
  }
  return out;
}

}  // namespace imti
