#include "imti/network.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

TargetScores TargetScores::from_entry(const ManifestEntry& e) {
  TargetScores t;
  t.y = {e.intelligibility, invert_cer(e.cer_whisper), invert_cer(e.cer_google), e.stoi};
  return t;
}

void PredictionBundle::validate() const {
  for (std::size_t k = 0; k < 4; ++k) {
    const BranchOutput& b = targets[k];
    if (b.frame_scores.empty()) throw ValidationError("prediction has no frames");
    double sum = 0.0;
    for (double s : b.frame_scores) {
      if (!std::isfinite(s)) throw ValidationError("non-finite frame score");
      sum += s;
    }
    const double mean = sum / static_cast<double>(b.frame_scores.size());
    if (!std::isfinite(b.utterance) || std::fabs(b.utterance - mean) > 1e-12)
      throw ValidationError(strf("utterance score %.17g drifts from frame mean %.17g", b.utterance, mean));
  }
}

namespace {

std::vector<std::size_t> identity_idx(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace

PredictionBundle model_forward(const Waveform& w, const Matrix& stft_mag,
                               const AugmentedFeatureSequence& aug, const ParameterSet& p,
                               const ModelConfig& cfg, ModelCache* cache) {
  cfg.validate();
  if (stft_mag.cols() != cfg.stft_bins())
    throw ValidationError(strf("spectrogram has %zu bins, config expects %zu", stft_mag.cols(), cfg.stft_bins()));
  if (aug.frames.cols() != cfg.embedding_dim + 3)
    throw ValidationError(strf("augmented features are %zu wide, config expects %zu",
                               aug.frames.cols(), cfg.embedding_dim + 3));

  ModelCache local;
  ModelCache& mc = cache ? *cache : local;
  const bool keep = cache != nullptr;

  const std::size_t t_s = stft_mag.rows();
  const SincFilterbankParams fb = filterbank_view(p, cfg.lfb_kernel_len);
  const Matrix fb_out = sinc_filterbank_forward(w, fb, cfg.stft.hop, t_s, keep ? &mc.sinc : nullptr);

  const Matrix acoustic = hstack(stft_mag, fb_out);
  const Matrix cnn_out = cnn_forward(acoustic, p, cfg, keep ? &mc.cnn : nullptr);
  const Matrix adapter_out =
      affine_relu_forward(aug.frames, p.at("adapter.w"), p.at("adapter.b"), keep ? &mc.adapter : nullptr);

  const std::size_t t_align = std::min(adapter_out.rows(), cnn_out.rows());
  mc.adapter_idx = adapter_out.rows() == t_align ? identity_idx(t_align)
                                                 : align_indices(t_align, adapter_out.rows());
  mc.cnn_idx = cnn_out.rows() == t_align ? identity_idx(t_align) : align_indices(t_align, cnn_out.rows());
  mc.t_steps = t_align;

  const Matrix rec_in = hstack(select_rows(adapter_out, mc.adapter_idx), select_rows(cnn_out, mc.cnn_idx));
  if (keep) mc.rec_in = rec_in;

  Matrix rec_out;
  if (cfg.variant == Variant::cnn_slstm) {
    const SlstmParams pf = slstm_view(p, "fwd", cfg.forget_mode);
    const SlstmParams pb = slstm_view(p, "bwd", cfg.forget_mode);
    rec_out = bidirectional_slstm_forward(rec_in, pf, pb, keep ? &mc.rec_slstm : nullptr);
  } else {
    const RecurrentParams pf = lstm_view(p, "fwd");
    const RecurrentParams pb = lstm_view(p, "bwd");
    rec_out = bidirectional_lstm_forward(rec_in, pf, pb, keep ? &mc.rec_lstm : nullptr);
  }

  const Matrix s = affine_relu_forward(rec_out, p.at("fc.w"), p.at("fc.b"), keep ? &mc.fc : nullptr);

  PredictionBundle out;
  for (std::size_t k = 0; k < 4; ++k)
    out.targets[k] = branch_forward(s, p, branch_keys()[k], keep ? &mc.branches[k] : nullptr);
  out.validate();
  return out;
}

void model_backward(const Waveform& w, const ParameterSet& p, const ModelConfig& cfg,
                    const ModelCache& cache, const std::array<std::vector<double>, 4>& d_frames,
                    ParameterSet& grads) {
  const std::size_t t_align = cache.t_steps;

  Matrix ds(t_align, cfg.fc_width);
  for (std::size_t k = 0; k < 4; ++k) {
    const Matrix dsk = branch_backward(p, branch_keys()[k], cache.branches[k], d_frames[k], grads);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.data()[i] += dsk.data()[i];
  }

  const Matrix drec_out = affine_relu_backward(p.at("fc.w"), cache.fc, ds, grads.at("fc.w"), grads.at("fc.b"));

  Matrix drec_in;
  if (cfg.variant == Variant::cnn_slstm) {
    const SlstmParams pf = slstm_view(p, "fwd", cfg.forget_mode);
    const SlstmParams pb = slstm_view(p, "bwd", cfg.forget_mode);
    drec_in = bidirectional_slstm_backward(pf, pb, cache.rec_slstm, drec_out,
                                           recurrent_grad_view(grads, "fwd", cfg.variant),
                                           recurrent_grad_view(grads, "bwd", cfg.variant));
  } else {
    const RecurrentParams pf = lstm_view(p, "fwd");
    const RecurrentParams pb = lstm_view(p, "bwd");
    drec_in = bidirectional_lstm_backward(pf, pb, cache.rec_lstm, drec_out,
                                          recurrent_grad_view(grads, "fwd", cfg.variant),
                                          recurrent_grad_view(grads, "bwd", cfg.variant));
  }

  // split the fused rows and scatter back through the alignment selection
  const std::size_t a_width = cfg.adapter_width;
  Matrix d_adapter(cache.adapter.out.rows(), a_width);
  Matrix d_cnn(cache.cnn.acts.back().t_len, drec_in.cols() - a_width);
  for (std::size_t t = 0; t < t_align; ++t) {
    const double* row = drec_in.row(t);
    double* ar = d_adapter.row(cache.adapter_idx[t]);
    double* cr = d_cnn.row(cache.cnn_idx[t]);
    for (std::size_t c = 0; c < a_width; ++c) ar[c] += row[c];
    for (std::size_t c = 0; c < d_cnn.cols(); ++c) cr[c] += row[a_width + c];
  }

  affine_relu_backward(p.at("adapter.w"), cache.adapter, d_adapter, grads.at("adapter.w"),
                       grads.at("adapter.b"));

  const Matrix d_acoustic = cnn_backward(p, cfg, cache.cnn, d_cnn, grads);

  Matrix d_fb(d_acoustic.rows(), cfg.lfb_bands);
  const std::size_t bins = cfg.stft_bins();
  for (std::size_t t = 0; t < d_acoustic.rows(); ++t)
    for (std::size_t b = 0; b < cfg.lfb_bands; ++b) d_fb(t, b) = d_acoustic(t, bins + b);

  const SincFilterbankParams fb = filterbank_view(p, cfg.lfb_kernel_len);
  const SincGrads sg = sinc_filterbank_backward(w, fb, cfg.stft.hop, cache.sinc, d_fb);
  Tensor& dlow = grads.at("lfb.low_hz");
  Tensor& dband = grads.at("lfb.band_hz");
  for (std::size_t b = 0; b < cfg.lfb_bands; ++b) {
    dlow[b] += sg.d_low_hz[b];
    dband[b] += sg.d_band_hz[b];
  }
}

}  // namespace imti
