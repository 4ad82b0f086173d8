#pragma once

#include <cstddef>
#include <vector>

#include "imti/tensor.hpp"
#include "imti/wave.hpp"

namespace imti {

enum class WindowKind { hamming, rect };

const char* window_name(WindowKind w);
WindowKind parse_window(const std::string& s);

struct StftConfig {
  std::size_t fft_size = 512;  // power of two, >= 2
  std::size_t hop = 256;       // 0 < hop <= fft_size
  WindowKind window = WindowKind::hamming;

  void validate() const;
  std::size_t bins() const { return fft_size / 2 + 1; }
};

// Magnitude spectrogram, [frames x bins], all values >= 0.
struct SpectralFeatures {
  Matrix frames;
  double frame_rate = 0.0;  // frames per second
};

// Frames shared by the STFT and the filterbank on one waveform: full windows
// while they fit; a waveform shorter than fft_size but at least hop samples
// yields exactly one zero-padded frame; shorter than hop is an error.
std::size_t frame_count(std::size_t num_samples, const StftConfig& cfg);

SpectralFeatures stft_magnitude(const Waveform& w, const StftConfig& cfg);

std::vector<double> make_window(WindowKind kind, std::size_t n);

// In-place radix-2 FFT over interleaved (re, im) pairs; n must be a power
// of two. Exposed for the spectral tests.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

}  // namespace imti
