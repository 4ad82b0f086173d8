#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "imti/params.hpp"

namespace imti {

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  std::size_t coords_per_block = 25;  // capped at the block size
  std::uint64_t seed = 7;
  double anchor = 3e-4;   // tether weight applied by the harness, not the checker
  double jitter = 0.02;   // harness offset moving the check point off the init point
};

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double tol = 0.0;

  bool passed() const;
  const GradCheckBlock& worst() const;
};

// Central-difference check of analytic gradients against a scalar loss.
// Relative error per coordinate is |a - f| / max(|a|, |f|, 1e-8); each block
// reports the max over a seeded coordinate sample.
GradCheckReport finite_difference_gradcheck(const std::function<double(const ParameterSet&)>& loss,
                                            const ParameterSet& params, const ParameterSet& analytic,
                                            const GradCheckOptions& opt = {});

// Quadratic tether lambda * sum((theta - ref + 1)^2) added to a checked loss.
// Central differences are exact for quadratics, so analytic and differenced
// sides gain the same 2*lambda per coordinate. Coordinates the loss is exactly
// invariant to (normalized input-gate bias, attention key bias) then compare
// against a 2*lambda denominator instead of rounding noise at the 1e-8 floor;
// a wrong analytic gradient still shows up as the same |a - f| gap.
double anchor_loss(const ParameterSet& p, const ParameterSet& ref, double lambda);
void add_anchor_grads(const ParameterSet& p, const ParameterSet& ref, double lambda, ParameterSet& grads);

// Seeded uniform(-amplitude, amplitude) offset on every coordinate. Freshly
// initialized parameters rest dead ReLU windows exactly on the kink (zero bias
// plus all-zero inputs), where central differences are one-sided; derivatives
// are checked at a generic nearby point instead.
void jitter_parameters(ParameterSet& p, double amplitude, std::uint64_t seed);

void write_gradcheck_csv(const std::filesystem::path& path, const GradCheckReport& report);

}  // namespace imti
