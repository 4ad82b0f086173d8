#pragma once

#include <filesystem>
#include <vector>

namespace imti {

inline constexpr unsigned kSampleRate = 16000;

// Mono waveform, samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  unsigned sample_rate = kSampleRate;

  // Nonempty, 16 kHz, all samples finite.
  void validate() const;
};

// Strict reader: RIFF/WAVE, PCM format 1, 16-bit, mono, 16 kHz. Anything
// else is rejected rather than resampled or converted.
Waveform load_wav(const std::filesystem::path& path);

// 16-bit PCM writer; samples are clipped to [-1, 1] before quantization.
void save_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace imti
