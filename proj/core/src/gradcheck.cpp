#include "imti/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "imti/common.hpp"
#include "imti/rng.hpp"

namespace imti {

bool GradCheckReport::passed() const {
  for (const GradCheckBlock& b : blocks)
    if (!(b.max_rel_err <= tol)) return false;
  return !blocks.empty();
}

const GradCheckBlock& GradCheckReport::worst() const {
  if (blocks.empty()) throw ValidationError("gradcheck report is empty");
  return *std::max_element(blocks.begin(), blocks.end(),
                           [](const GradCheckBlock& a, const GradCheckBlock& b) {
                             return a.max_rel_err < b.max_rel_err;
                           });
}

GradCheckReport finite_difference_gradcheck(const std::function<double(const ParameterSet&)>& loss,
                                            const ParameterSet& params, const ParameterSet& analytic,
                                            const GradCheckOptions& opt) {
  if (!(opt.step > 0.0)) throw ValidationError("gradcheck step must be positive");
  GradCheckReport report;
  report.tol = opt.tol;

  ParameterSet work = params;
  Rng rng(opt.seed);
  for (const auto& [name, block] : params.blocks) {
    const Tensor& a = analytic.at(name);
    if (a.size() != block.size())
      throw ValidationError("gradcheck: analytic gradient shape mismatch in \"" + name + "\"");

    // sample distinct coordinates; a full sweep when the block is small
    std::vector<std::size_t> coords;
    if (block.size() <= opt.coords_per_block) {
      coords.resize(block.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      std::vector<std::size_t> all(block.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      rng.shuffle(all);
      coords.assign(all.begin(), all.begin() + static_cast<long>(opt.coords_per_block));
    }

    GradCheckBlock gb;
    gb.name = name;
    gb.checked = coords.size();
    Tensor& wt = work.at(name);
    for (std::size_t idx : coords) {
      const double saved = wt[idx];
      wt[idx] = saved + opt.step;
      const double up = loss(work);
      wt[idx] = saved - opt.step;
      const double down = loss(work);
      wt[idx] = saved;
      const double fd = (up - down) / (2.0 * opt.step);
      const double an = a[idx];
      const double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), 1e-8});
      gb.max_rel_err = std::max(gb.max_rel_err, rel);
    }
    report.blocks.push_back(std::move(gb));
  }
  return report;
}

double anchor_loss(const ParameterSet& p, const ParameterSet& ref, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("anchor weight must be non-negative");
  // Kahan summation: the sum crosses ~1e4 coordinates while a single probe
  // moves one term by ~2*step, which plain accumulation would grind into the
  // rounding of the running total.
  double sum = 0.0, carry = 0.0;
  for (const auto& [name, block] : p.blocks) {
    const Tensor& r = ref.at(name);
    for (std::size_t i = 0; i < block.size(); ++i) {
      const double d = block[i] - r[i] + 1.0;
      const double term = d * d - carry;
      const double next = sum + term;
      carry = (next - sum) - term;
      sum = next;
    }
  }
  return lambda * sum;
}

void add_anchor_grads(const ParameterSet& p, const ParameterSet& ref, double lambda, ParameterSet& grads) {
  for (auto& [name, block] : grads.blocks) {
    const Tensor& v = p.at(name);
    const Tensor& r = ref.at(name);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] += 2.0 * lambda * (v[i] - r[i] + 1.0);
  }
}

void jitter_parameters(ParameterSet& p, double amplitude, std::uint64_t seed) {
  if (!(amplitude >= 0.0)) throw ValidationError("jitter amplitude must be non-negative");
  Rng rng(seed);
  for (auto& [name, block] : p.blocks)
    for (double& x : block.v) x += rng.uniform(-amplitude, amplitude);
}

void write_gradcheck_csv(const std::filesystem::path& path, const GradCheckReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write gradcheck report: " + path.string());
  out << "block,max_rel_err,checked\n";
  for (const GradCheckBlock& b : report.blocks)
    out << b.name << ',' << format_double(b.max_rel_err) << ',' << b.checked << '\n';
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace imti
