#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "imti/recurrent.hpp"
#include "imti/sinc.hpp"
#include "imti/stft.hpp"
#include "imti/tensor.hpp"

namespace imti {

enum class Variant { cnn_blstm, cnn_slstm };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct ModelConfig {
  Variant variant = Variant::cnn_slstm;
  ForgetMode forget_mode = ForgetMode::exponential;
  std::size_t embedding_dim = 0;  // D, fixed by the data
  std::array<std::size_t, 4> cnn_channels = {16, 32, 64, 128};
  std::size_t recurrent_hidden = 128;  // per direction
  std::size_t fc_width = 128;
  std::size_t adapter_width = 128;
  StftConfig stft;
  std::size_t lfb_bands = 64;
  std::size_t lfb_kernel_len = 251;

  void validate() const;
  std::size_t stft_bins() const { return stft.bins(); }
  std::size_t cnn_input_width() const { return stft_bins() + lfb_bands; }
  std::size_t cnn_output_width() const;
  std::size_t cnn_features() const { return cnn_channels[3] * cnn_output_width(); }
  std::size_t recurrent_input() const { return adapter_width + cnn_features(); }
};

// Named parameter blocks. Gradients, Adam moments, and checkpoints all reuse
// this container with identical block names and shapes.
struct ParameterSet {
  std::map<std::string, Tensor> blocks;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return blocks.count(name) != 0; }

  ParameterSet zeros_like() const;
  void fill(double value);
  std::size_t total_size() const;
  bool all_finite(std::string* offending = nullptr) const;
};

// Canonical (name, shape) list for a config; the order is the seeding and
// serialization order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_shapes(const ModelConfig& cfg);

ParameterSet zero_parameters(const ModelConfig& cfg);
ParameterSet init_parameters(const ModelConfig& cfg, std::uint64_t seed);

// Orthonormal square matrix from seeded Gram-Schmidt; exposed for tests.
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

// View binding into a ParameterSet. dir is "fwd" or "bwd".
SlstmParams slstm_view(const ParameterSet& p, const std::string& dir, ForgetMode mode);
RecurrentParams lstm_view(const ParameterSet& p, const std::string& dir);
RecurrentGrads recurrent_grad_view(ParameterSet& g, const std::string& dir, Variant variant);

SincFilterbankParams filterbank_view(const ParameterSet& p, std::size_t kernel_len);
void store_filterbank(ParameterSet& p, const SincFilterbankParams& fb);

const std::array<std::string, 4>& branch_keys();      // int, cer_ws, cer_goo, stoi
const std::array<std::string, 4>& target_names();     // intelligibility, ...

}  // namespace imti
