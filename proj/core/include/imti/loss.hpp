#pragma once

#include <array>
#include <vector>

#include "imti/network.hpp"

namespace imti {

struct LossWeights {
  std::array<double, 4> gamma = {1.0, 1.0, 1.0, 5.0};
  double frame_weight = 1.0;  // alpha on the frame-level term

  void validate() const;
};

// (u - y)^2 + alpha * mean_t (fs_t - y)^2, the per-target objective with the
// utterance label broadcast to every frame.
double metric_loss(const std::vector<double>& frame_scores, double utterance, double label,
                   double frame_weight);

double total_loss(const PredictionBundle& pred, const TargetScores& y, const LossWeights& w);

// dL/d frame_scores per target. Uses utterance = mean(frames), so the
// utterance term contributes 2(u - y)/T to every frame.
std::array<std::vector<double>, 4> total_loss_frame_grads(const PredictionBundle& pred,
                                                          const TargetScores& y,
                                                          const LossWeights& w);

}  // namespace imti
