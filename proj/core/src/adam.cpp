#include "imti/adam.hpp"

#include <cmath>

#include "imti/common.hpp"

namespace imti {

OptimizerState OptimizerState::zero(const ParameterSet& params) {
  OptimizerState s;
  s.m = params.zeros_like();
  s.v = params.zeros_like();
  return s;
}

void adam_update(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, double lr,
                 const AdamConfig& cfg) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError(strf("learning rate %g must be positive", lr));
  std::string bad;
  if (!grads.all_finite(&bad))
    throw ValidationError("non-finite gradient in block \"" + bad + "\"");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, p] : params.blocks) {
    const Tensor& g = grads.at(name);
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    if (g.size() != p.size() || m.size() != p.size())
      throw ValidationError("adam_update: shape mismatch in block \"" + name + "\"");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace imti
