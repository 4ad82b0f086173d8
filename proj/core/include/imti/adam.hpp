#pragma once

#include <cstdint>

#include "imti/params.hpp"

namespace imti {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  ParameterSet m, v;
  std::uint64_t step = 0;

  static OptimizerState zero(const ParameterSet& params);
};

// One bias-corrected Adam step. Rejects non-finite gradients by block name
// before touching the parameters.
void adam_update(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, double lr,
                 const AdamConfig& cfg = {});

}  // namespace imti
