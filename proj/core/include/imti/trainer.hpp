#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "imti/adam.hpp"
#include "imti/dataset.hpp"
#include "imti/gradcheck.hpp"
#include "imti/loss.hpp"
#include "imti/network.hpp"

namespace imti {

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 1;  // the only supported value
  std::size_t max_epochs = 60;
  std::size_t patience = 15;
  std::uint64_t seed = 1;
  LossWeights loss;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  // per target, NaN when the correlation is undefined (constant inputs)
  std::array<double, 4> val_lcc = {};
  std::array<double, 4> val_srcc = {};
};

struct TrainResult {
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochLog> log;
  ParameterSet best_params;
  OptimizerState best_opt;
};

// Self-contained seeded utterance (noise embedding, tone-plus-noise wave)
// sized for cfg; used by the gradient checker and the stress tests.
UtteranceData synthetic_utterance(const ModelConfig& cfg, std::uint64_t seed, std::size_t t_emb = 5);

PredictionBundle predict_utterance(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg);
double utterance_loss(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg,
                      const LossWeights& w);
double utterance_loss_and_grads(const UtteranceData& u, const ParameterSet& p, const ModelConfig& cfg,
                                const LossWeights& w, ParameterSet& grads);

// Adam on shuffled single utterances, early stopping on validation loss,
// best-epoch snapshot returned. Deterministic for a fixed seed.
TrainResult train_loop(const TrainConfig& tc, const ModelConfig& mc, const Dataset& ds);

// Differences the full model loss on a synthetic utterance at a jittered
// init point, with the anchor applied to both sides. corrupt_block, when
// non-empty, negates that block's analytic gradient first; the checker is
// expected to flag exactly that block.
GradCheckReport model_gradcheck(const ModelConfig& mc, const LossWeights& w, const GradCheckOptions& opt,
                                const std::string& corrupt_block = {});

void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

}  // namespace imti
