#include "imti/synth.hpp"

#include <algorithm>
#include <cmath>

#include "imti/common.hpp"
#include "imti/embedding.hpp"
#include "imti/rng.hpp"
#include "imti/wave.hpp"

namespace imti {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

void SynthConfig::validate() const {
  if (n_train < 2 || n_val < 2 || n_test < 2)
    throw ValidationError("synth needs at least 2 utterances per split");
  if (embedding_dim < 2) throw ValidationError("synth embedding_dim must be >= 2");
  if (t_min < 2 || t_max < t_min) throw ValidationError("synth needs 2 <= t_min <= t_max");
}

void synth_dataset(const SynthConfig& cfg, const StftConfig& stft_cfg,
                   const std::filesystem::path& out_dir) {
  cfg.validate();
  stft_cfg.validate();
  std::filesystem::create_directories(out_dir);

  Rng root(cfg.seed);
  const std::size_t total = cfg.n_train + cfg.n_val + cfg.n_test;
  std::vector<ManifestEntry> entries;
  entries.reserve(total);

  for (std::size_t u = 0; u < total; ++u) {
    Rng rng = root.fork();
    const std::string id = strf("utt%04zu", u);
    const std::size_t t_emb = cfg.t_min + rng.below(cfg.t_max - cfg.t_min + 1);
    const double clarity = rng.uniform(0.05, 0.95);

    // embeddings: one channel per frame is boosted by the clarity, which
    // drives the softmax entropy down as clarity rises
    Matrix emb(t_emb, cfg.embedding_dim);
    for (std::size_t t = 0; t < t_emb; ++t) {
      double* row = emb.row(t);
      for (std::size_t j = 0; j < cfg.embedding_dim; ++j) row[j] = rng.normal(0.0, 0.5);
      row[(t + u) % cfg.embedding_dim] += 4.0 * clarity;
    }

    // waveform at twice the embedding frame count: a clarity-scaled tone
    // against a noise floor that grows as clarity falls
    const std::size_t t_wav = 2 * t_emb;
    const std::size_t len = (t_wav - 1) * stft_cfg.hop + stft_cfg.fft_size;
    const double tone_hz = 300.0 + 3000.0 * clarity;
    const double tone_amp = 0.1 + 0.5 * clarity;
    const double noise_amp = 0.3 * (1.0 - clarity) + 0.02;
    Waveform w;
    w.samples.resize(len);
    for (std::size_t n = 0; n < len; ++n) {
      const double tone = tone_amp * std::sin(kTau * tone_hz * static_cast<double>(n) / kSampleRate);
      w.samples[n] = std::clamp(tone + noise_amp * rng.normal(), -1.0, 1.0);
    }

    ManifestEntry e;
    e.id = id;
    e.embedding_path = id + ".emb";
    e.waveform_path = id + ".wav";
    e.intelligibility = clamp01(clarity + rng.normal(0.0, 0.02));
    e.cer_whisper = std::clamp(1.0 - clarity + rng.normal(0.0, 0.03), 0.0, 1.2);
    e.cer_google = std::clamp(1.05 - 0.9 * clarity + rng.normal(0.0, 0.04), 0.0, 1.2);
    e.stoi = clamp01(0.1 + 0.85 * clarity + rng.normal(0.0, 0.02));
    e.split = u < cfg.n_train ? Split::train : (u < cfg.n_train + cfg.n_val ? Split::val : Split::test);

    save_embedding(out_dir / (id + ".emb"), emb);
    save_wav(out_dir / (id + ".wav"), w);
    entries.push_back(std::move(e));
  }

  save_manifest(out_dir / "manifest.jsonl", entries);
}

}  // namespace imti
