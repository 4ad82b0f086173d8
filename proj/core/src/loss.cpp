#include "imti/loss.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

void LossWeights::validate() const {
  for (double g : gamma)
    if (!(g >= 0.0) || !std::isfinite(g)) throw ValidationError(strf("loss weight %g must be finite and >= 0", g));
  if (!(frame_weight >= 0.0) || !std::isfinite(frame_weight))
    throw ValidationError(strf("frame weight %g must be finite and >= 0", frame_weight));
}

double metric_loss(const std::vector<double>& frame_scores, double utterance, double label,
                   double frame_weight) {
  if (frame_scores.empty()) throw ValidationError("metric_loss: no frame scores");
  const double du = utterance - label;
  double frame_term = 0.0;
  for (double fs : frame_scores) {
    const double d = fs - label;
    frame_term += d * d;
  }
  frame_term /= static_cast<double>(frame_scores.size());
  return du * du + frame_weight * frame_term;
}

double total_loss(const PredictionBundle& pred, const TargetScores& y, const LossWeights& w) {
  w.validate();
  double loss = 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    loss += w.gamma[k] * metric_loss(pred.targets[k].frame_scores, pred.targets[k].utterance, y[k],
                                     w.frame_weight);
  return loss;
}

std::array<std::vector<double>, 4> total_loss_frame_grads(const PredictionBundle& pred,
                                                          const TargetScores& y,
                                                          const LossWeights& w) {
  w.validate();
  std::array<std::vector<double>, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    const BranchOutput& b = pred.targets[k];
    const double t_len = static_cast<double>(b.frame_scores.size());
    const double utter_part = 2.0 * (b.utterance - y[k]) / t_len;
    out[k].resize(b.frame_scores.size());
    for (std::size_t t = 0; t < b.frame_scores.size(); ++t)
      out[k][t] = w.gamma[k] * (utter_part + w.frame_weight * 2.0 * (b.frame_scores[t] - y[k]) / t_len);
  }
  return out;
}

}  // namespace imti
