#include "imti/stft.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

const char* window_name(WindowKind w) {
  return w == WindowKind::hamming ? "hamming" : "rect";
}

WindowKind parse_window(const std::string& s) {
  if (s == "hamming") return WindowKind::hamming;
  if (s == "rect") return WindowKind::rect;
  throw ValidationError("unknown window \"" + s + "\" (expected hamming or rect)");
}

void StftConfig::validate() const {
  if (!is_pow2(fft_size)) throw ValidationError(strf("fft_size %zu is not a power of two >= 2", fft_size));
  if (hop == 0 || hop > fft_size)
    throw ValidationError(strf("hop %zu outside (0, fft_size=%zu]", hop, fft_size));
}

std::size_t frame_count(std::size_t num_samples, const StftConfig& cfg) {
  cfg.validate();
  if (num_samples >= cfg.fft_size) return 1 + (num_samples - cfg.fft_size) / cfg.hop;
  if (num_samples >= cfg.hop) return 1;
  throw ValidationError(strf("waveform of %zu samples is shorter than hop %zu", num_samples, cfg.hop));
}

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::hamming && n > 1)
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.54 - 0.46 * std::cos(kTau * static_cast<double>(i) / static_cast<double>(n - 1));
  return w;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = re.size();
  if (n != im.size() || !is_pow2(n)) throw ValidationError("fft_radix2: length must be a power of two >= 2");

  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -kTau / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

SpectralFeatures stft_magnitude(const Waveform& w, const StftConfig& cfg) {
  w.validate();
  const std::size_t t_len = frame_count(w.samples.size(), cfg);
  const std::size_t n = cfg.fft_size;
  const std::vector<double> win = make_window(cfg.window, n);

  SpectralFeatures out;
  out.frame_rate = static_cast<double>(w.sample_rate) / static_cast<double>(cfg.hop);
  out.frames = Matrix(t_len, cfg.bins());

  std::vector<double> re(n), im(n);
  for (std::size_t t = 0; t < t_len; ++t) {
    const std::size_t start = t * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = start + i;
      re[i] = s < w.samples.size() ? win[i] * w.samples[s] : 0.0;
      im[i] = 0.0;
    }
    fft_radix2(re, im);
    double* row = out.frames.row(t);
    for (std::size_t k = 0; k < cfg.bins(); ++k) row[k] = std::hypot(re[k], im[k]);
  }
  return out;
}

}  // namespace imti
