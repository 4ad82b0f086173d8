#include "imti/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "imti/common.hpp"
#include "imti/metrics.hpp"
#include "imti/rng.hpp"

namespace imti {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError(strf("learning_rate %g must be positive", learning_rate));
  if (batch_size != 1) throw ValidationError("only batch_size = 1 is supported");
  if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
  if (patience == 0) throw ValidationError("patience must be positive");
  loss.validate();
}

UtteranceData synthetic_utterance(const ModelConfig& cfg, std::uint64_t seed, std::size_t t_emb) {
  if (t_emb < 2) throw ValidationError("synthetic_utterance: need at least 2 frames");
  Rng rng(seed);
  UtteranceData u;
  u.id = strf("synthetic-%llu", static_cast<unsigned long long>(seed));

  const std::size_t d = cfg.embedding_dim;
  EmbeddingSequence emb;
  emb.frames = Matrix(t_emb, d);
  for (std::size_t i = 0; i < emb.frames.size(); ++i) emb.frames.data()[i] = rng.normal();
  u.aug = augment_sequence(emb);

  const std::size_t t_wav = 2 * t_emb;
  u.wave.samples.resize((t_wav - 1) * cfg.stft.hop + cfg.stft.fft_size);
  for (std::size_t n = 0; n < u.wave.samples.size(); ++n) {
    const double tone = 0.3 * std::sin(0.11 * static_cast<double>(n));
    u.wave.samples[n] = std::clamp(tone + 0.2 * rng.normal(), -1.0, 1.0);
  }
  u.stft_mag = stft_magnitude(u.wave, cfg.stft).frames;
  u.targets.y = {0.7, 0.4, 0.5, 0.8};
  return u;
}

PredictionBundle predict_utterance(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg) {
  return model_forward(u.wave, u.stft_mag, u.aug, p, cfg);
}

double utterance_loss(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg,
                      const LossWeights& w) {
  return total_loss(predict_utterance(u, p, cfg), u.targets, w);
}

double utterance_loss_and_grads(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg,
                                const LossWeights& w, ParameterSet& grads) {
  ModelCache cache;
  const PredictionBundle pred = model_forward(u.wave, u.stft_mag, u.aug, p, cfg, &cache);
  const double loss = total_loss(pred, u.targets, w);
  model_backward(u.wave, p, cfg, cache, total_loss_frame_grads(pred, u.targets, w), grads);
  return loss;
}

namespace {

void project_filterbank_params(ParameterSet& p) {
  Tensor& low = p.at("lfb.low_hz");
  Tensor& band = p.at("lfb.band_hz");
  project_filterbank(low.v, band.v);
}

struct ValStats {
  double loss = 0.0;
  std::array<double, 4> lcc = {}, srcc = {};
};

ValStats validate_pass(const Dataset& ds, const std::vector<std::size_t>& val_idx,
                       const ParameterSet& p, const ModelConfig& mc, const LossWeights& lw) {
  ValStats out;
  std::array<std::vector<double>, 4> pred, truth;
  for (std::size_t i : val_idx) {
    const UtteranceData& u = ds.items[i];
    const PredictionBundle pb = predict_utterance(u, p, mc);
    out.loss += total_loss(pb, u.targets, lw);
    for (std::size_t k = 0; k < 4; ++k) {
      pred[k].push_back(pb.targets[k].utterance);
      truth[k].push_back(u.targets[k]);
    }
  }
  out.loss /= static_cast<double>(val_idx.size());
  for (std::size_t k = 0; k < 4; ++k) {
    // correlations can be legitimately undefined early on; keep NaN in the
    // log instead of failing the run
    try {
      out.lcc[k] = pearson_lcc(pred[k], truth[k]);
      out.srcc[k] = spearman_srcc(pred[k], truth[k]);
    } catch (const ValidationError&) {
      out.lcc[k] = std::numeric_limits<double>::quiet_NaN();
      out.srcc[k] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace

TrainResult train_loop(const TrainConfig& tc, const ModelConfig& mc, const Dataset& ds) {
  tc.validate();
  mc.validate();
  if (mc.embedding_dim != ds.embedding_dim)
    throw ValidationError(strf("config embedding_dim %zu but dataset has %zu", mc.embedding_dim,
                               ds.embedding_dim));
  const std::vector<std::size_t> train_idx = ds.split_indices(Split::train);
  const std::vector<std::size_t> val_idx = ds.split_indices(Split::val);
  if (train_idx.empty()) throw ValidationError("train split is empty");
  if (val_idx.empty()) throw ValidationError("val split is empty");

  ParameterSet params = init_parameters(mc, tc.seed);
  OptimizerState opt = OptimizerState::zero(params);
  Rng shuffle_rng(tc.seed ^ 0xd1b54a32d192ed03ull);

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    shuffle_rng.shuffle(order);

    double train_loss = 0.0;
    ParameterSet grads = params.zeros_like();
    for (std::size_t i : order) {
      grads.fill(0.0);
      train_loss += utterance_loss_and_grads(ds.items[i], params, mc, tc.loss, grads);
      adam_update(params, grads, opt, tc.learning_rate);
      project_filterbank_params(params);
    }
    train_loss /= static_cast<double>(order.size());

    const ValStats vs = validate_pass(ds, val_idx, params, mc, tc.loss);

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss;
    log.val_loss = vs.loss;
    log.val_lcc = vs.lcc;
    log.val_srcc = vs.srcc;
    result.log.push_back(log);

    if (vs.loss < result.best_val_loss) {
      result.best_val_loss = vs.loss;
      result.best_epoch = epoch;
      result.best_params = params;
      result.best_opt = opt;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= tc.patience) break;
    }
  }
  return result;
}

GradCheckReport model_gradcheck(const ModelConfig& mc, const LossWeights& w, const GradCheckOptions& opt,
                                const std::string& corrupt_block) {
  const UtteranceData u = synthetic_utterance(mc, opt.seed);
  ParameterSet params = init_parameters(mc, opt.seed + 1);
  jitter_parameters(params, opt.jitter, opt.seed + 2);

  ParameterSet analytic = params.zeros_like();
  utterance_loss_and_grads(u, params, mc, w, analytic);
  add_anchor_grads(params, params, opt.anchor, analytic);
  if (!corrupt_block.empty()) {
    Tensor& t = analytic.at(corrupt_block);
    for (double& g : t.v) g = -g;
  }

  const auto loss_fn = [&](const ParameterSet& p) {
    return utterance_loss(u, p, mc, w) + anchor_loss(p, params, opt.anchor);
  };
  return finite_difference_gradcheck(loss_fn, params, analytic, opt);
}

void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write training log: " + path.string());
  out << "epoch,train_loss,val_loss";
  for (const std::string& key : branch_keys()) out << ",val_lcc_" << key << ",val_srcc_" << key;
  out << '\n';
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss);
    for (std::size_t k = 0; k < 4; ++k)
      out << ',' << format_double(e.val_lcc[k]) << ',' << format_double(e.val_srcc[k]);
    out << '\n';
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace imti
