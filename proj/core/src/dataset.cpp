#include "imti/dataset.hpp"

#include "imti/common.hpp"

namespace imti {

std::vector<std::size_t> Dataset::split_indices(Split s) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].split == s) idx.push_back(i);
  return idx;
}

Dataset load_dataset(const std::filesystem::path& manifest_path, const StftConfig& stft_cfg,
                     bool require_waveforms) {
  const std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  stft_cfg.validate();

  Dataset ds;
  ds.items.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    UtteranceData u;
    u.id = e.id;
    u.split = e.split;
    u.targets = TargetScores::from_entry(e);

    const EmbeddingSequence emb = load_embedding(e.embedding_path);
    if (ds.embedding_dim == 0) ds.embedding_dim = emb.dim();
    if (emb.dim() != ds.embedding_dim)
      throw ValidationError(strf("utterance \"%s\" has embedding dimension %zu, dataset uses %zu",
                                 e.id.c_str(), emb.dim(), ds.embedding_dim));
    u.aug = augment_sequence(emb);

    if (e.waveform_path) {
      u.wave = load_wav(*e.waveform_path);
      u.stft_mag = stft_magnitude(u.wave, stft_cfg).frames;
    } else if (require_waveforms) {
      throw ValidationError("utterance \"" + e.id + "\" has no waveform; this pipeline needs one");
    }
    ds.items.push_back(std::move(u));
  }
  return ds;
}

}  // namespace imti
