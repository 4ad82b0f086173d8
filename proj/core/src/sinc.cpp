#include "imti/sinc.hpp"

#include <algorithm>
#include <cmath>

#include "imti/common.hpp"
#include "imti/stft.hpp"

namespace imti {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kNyquist = kSampleRate / 2.0;

double mel_of(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_of(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Ideal low-pass impulse response at cutoff f, tap offset n from center.
double lowpass_tap(double f, long n) {
  if (n == 0) return 2.0 * f / kSampleRate;
  const double x = static_cast<double>(n);
  return std::sin(2.0 * kPi * x * f / kSampleRate) / (kPi * x);
}

double lowpass_tap_df(double f, long n) {
  return 2.0 / kSampleRate * std::cos(2.0 * kPi * static_cast<double>(n) * f / kSampleRate);
}

}  // namespace

void SincFilterbankParams::validate() const {
  if (low_hz.empty()) throw ValidationError("filterbank has no bands");
  if (band_hz.size() != low_hz.size())
    throw ValidationError(strf("filterbank arrays disagree: %zu low vs %zu band", low_hz.size(), band_hz.size()));
  if (kernel_len < 3 || kernel_len % 2 == 0)
    throw ValidationError(strf("kernel_len %zu must be odd and >= 3", kernel_len));
  for (std::size_t b = 0; b < low_hz.size(); ++b) {
    if (!(low_hz[b] > 0.0)) throw ValidationError(strf("band %zu: low cutoff %g must be > 0", b, low_hz[b]));
    if (!(band_hz[b] > 0.0)) throw ValidationError(strf("band %zu: bandwidth %g must be > 0", b, band_hz[b]));
    if (low_hz[b] + band_hz[b] > kNyquist)
      throw ValidationError(strf("band %zu: upper cutoff %g exceeds Nyquist %g", b, low_hz[b] + band_hz[b], kNyquist));
  }
}

SincFilterbankParams mel_init_filterbank(std::size_t bands, std::size_t kernel_len) {
  if (bands == 0) throw ValidationError("filterbank needs at least one band");
  SincFilterbankParams p;
  p.kernel_len = kernel_len;
  const double m_lo = mel_of(30.0), m_hi = mel_of(7900.0);
  std::vector<double> edges(bands + 1);
  for (std::size_t i = 0; i <= bands; ++i)
    edges[i] = hz_of(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(bands));
  p.low_hz.resize(bands);
  p.band_hz.resize(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    p.low_hz[b] = edges[b];
    p.band_hz[b] = edges[b + 1] - edges[b];
  }
  p.validate();
  return p;
}

Matrix sinc_kernels(const SincFilterbankParams& p) {
  p.validate();
  const std::size_t k_len = p.kernel_len;
  const long center = static_cast<long>(k_len / 2);
  const std::vector<double> win = make_window(WindowKind::hamming, k_len);
  const double win_sum = [&] {
    double s = 0.0;
    for (double v : win) s += v;
    return s;
  }();

  Matrix kernels(p.bands(), k_len);
  for (std::size_t b = 0; b < p.bands(); ++b) {
    const double f1 = p.low_hz[b], f2 = p.low_hz[b] + p.band_hz[b];
    double* h = kernels.row(b);
    double dc = 0.0;
    for (std::size_t k = 0; k < k_len; ++k) {
      const long n = static_cast<long>(k) - center;
      h[k] = win[k] * (lowpass_tap(f2, n) - lowpass_tap(f1, n));
      dc += h[k];
    }
    const double scale = dc / win_sum;
    for (std::size_t k = 0; k < k_len; ++k) h[k] -= win[k] * scale;
  }
  return kernels;
}

Matrix sinc_filterbank_forward(const Waveform& w, const SincFilterbankParams& p,
                               std::size_t stride, std::size_t num_frames, SincCache* cache) {
  w.validate();
  if (stride == 0) throw ValidationError("filterbank stride must be positive");
  if (num_frames == 0) throw ValidationError("filterbank needs at least one frame");
  const std::size_t len = w.samples.size();
  if ((num_frames - 1) * stride >= len)
    throw ValidationError(strf("frame %zu starts at sample %zu beyond waveform of %zu",
                               num_frames - 1, (num_frames - 1) * stride, len));

  const Matrix kernels = sinc_kernels(p);
  const std::size_t k_len = p.kernel_len;

  Matrix conv(num_frames, p.bands());
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t pos = t * stride;
    const std::size_t k_max = std::min(k_len, pos + 1);  // x index pos-k must be >= 0
    for (std::size_t b = 0; b < p.bands(); ++b) {
      const double* h = kernels.row(b);
      double s = 0.0;
      for (std::size_t k = 0; k < k_max; ++k) s += h[k] * w.samples[pos - k];
      conv(t, b) = s;
    }
  }

  Matrix out(num_frames, p.bands());
  for (std::size_t i = 0; i < conv.size(); ++i) out.data()[i] = std::fabs(conv.data()[i]);

  if (cache) {
    cache->kernels = kernels;
    cache->conv = std::move(conv);
  }
  return out;
}

SincGrads sinc_filterbank_backward(const Waveform& w, const SincFilterbankParams& p,
                                   std::size_t stride, const SincCache& cache,
                                   const Matrix& upstream) {
  const std::size_t num_frames = upstream.rows();
  if (cache.conv.rows() != num_frames || cache.conv.cols() != p.bands() || upstream.cols() != p.bands())
    throw ValidationError("filterbank backward: shape mismatch with cache");
  const std::size_t k_len = p.kernel_len;
  const long center = static_cast<long>(k_len / 2);
  const std::vector<double> win = make_window(WindowKind::hamming, k_len);
  const double win_sum = [&] {
    double s = 0.0;
    for (double v : win) s += v;
    return s;
  }();

  // dL/dh_b[k] = sum_t upstream * sign(conv) * x[pos-k]
  Matrix dk(p.bands(), k_len);
  for (std::size_t t = 0; t < num_frames; ++t) {
    const std::size_t pos = t * stride;
    const std::size_t k_max = std::min(k_len, pos + 1);
    for (std::size_t b = 0; b < p.bands(); ++b) {
      const double c = cache.conv(t, b);
      if (c == 0.0) continue;
      const double g = upstream(t, b) * (c > 0.0 ? 1.0 : -1.0);
      if (g == 0.0) continue;
      double* row = dk.row(b);
      for (std::size_t k = 0; k < k_max; ++k) row[k] += g * w.samples[pos - k];
    }
  }

  // Chain through the DC correction h = pre - win * (sum(pre)/sum(win)):
  // dh[k]/dth = dpre[k]/dth - win[k]/win_sum * sum_j dpre[j]/dth.
  SincGrads g;
  g.d_low_hz.assign(p.bands(), 0.0);
  g.d_band_hz.assign(p.bands(), 0.0);
  std::vector<double> dpre_dlow(k_len), dpre_dband(k_len);
  for (std::size_t b = 0; b < p.bands(); ++b) {
    const double f1 = p.low_hz[b], f2 = p.low_hz[b] + p.band_hz[b];
    double sum_low = 0.0, sum_band = 0.0;
    for (std::size_t k = 0; k < k_len; ++k) {
      const long n = static_cast<long>(k) - center;
      const double d2 = lowpass_tap_df(f2, n);
      dpre_dlow[k] = win[k] * (d2 - lowpass_tap_df(f1, n));
      dpre_dband[k] = win[k] * d2;
      sum_low += dpre_dlow[k];
      sum_band += dpre_dband[k];
    }
    const double* row = dk.row(b);
    for (std::size_t k = 0; k < k_len; ++k) {
      const double wk = win[k] / win_sum;
      g.d_low_hz[b] += row[k] * (dpre_dlow[k] - wk * sum_low);
      g.d_band_hz[b] += row[k] * (dpre_dband[k] - wk * sum_band);
    }
  }
  return g;
}

void project_filterbank(std::vector<double>& low_hz, std::vector<double>& band_hz) {
  for (std::size_t b = 0; b < low_hz.size(); ++b) {
    low_hz[b] = std::clamp(low_hz[b], 1.0, kNyquist - 2.0);
    band_hz[b] = std::clamp(band_hz[b], 1.0, kNyquist - low_hz[b]);
  }
}

}  // namespace imti
