#pragma once

#include <cstddef>
#include <vector>

#include "imti/tensor.hpp"
#include "imti/wave.hpp"

namespace imti {

// Learnable band-pass filterbank: Hamming-windowed differences of two sinc
// low-pass kernels per band, parametrized by (low cutoff, bandwidth) in Hz.
struct SincFilterbankParams {
  std::vector<double> low_hz;   // > 0
  std::vector<double> band_hz;  // > 0; low + band <= Nyquist
  std::size_t kernel_len = 251; // odd, >= 3

  std::size_t bands() const { return low_hz.size(); }
  void validate() const;
};

// Mel-spaced cutoffs over [30, 7900] Hz.
SincFilterbankParams mel_init_filterbank(std::size_t bands, std::size_t kernel_len);

// One kernel per row. Each row has exact even symmetry about its center tap
// and a DC response that cancels to rounding noise (an explicit correction
// subtracts the windowed mean).
Matrix sinc_kernels(const SincFilterbankParams& p);

struct SincCache {
  Matrix kernels;  // [B x K]
  Matrix conv;     // pre-magnitude convolution, [T x B]
};

// out[t][b] = |sum_k h_b[k] * x[t*stride - k]|, x zero outside its support.
// num_frames is supplied by the caller so the output aligns row-for-row with
// the spectrogram of the same waveform.
Matrix sinc_filterbank_forward(const Waveform& w, const SincFilterbankParams& p,
                               std::size_t stride, std::size_t num_frames,
                               SincCache* cache = nullptr);

struct SincGrads {
  std::vector<double> d_low_hz;
  std::vector<double> d_band_hz;
};

// Gradient of sum(upstream .* output) in the cutoff parameters. The
// magnitude uses the sign subgradient (0 where the convolution is exactly 0).
SincGrads sinc_filterbank_backward(const Waveform& w, const SincFilterbankParams& p,
                                   std::size_t stride, const SincCache& cache,
                                   const Matrix& upstream);

// Clamp cutoffs back into the valid region after a gradient step.
void project_filterbank(std::vector<double>& low_hz, std::vector<double>& band_hz);

}  // namespace imti
