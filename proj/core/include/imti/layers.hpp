#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "imti/params.hpp"
#include "imti/tensor.hpp"

namespace imti {

// y = relu(x W^T + b), applied row-wise over a sequence.
struct AffineReluCache {
  Matrix in;
  Matrix out;  // post-relu; the relu mask is out > 0
};

Matrix affine_relu_forward(const Matrix& x, const Tensor& w, const Tensor& b, AffineReluCache* cache = nullptr);
Matrix affine_relu_backward(const Tensor& w, const AffineReluCache& cache, const Matrix& upstream,
                            Tensor& dw, Tensor& db);

// [channels x T x F] activation block, contiguous, t fastest over f.
struct FeatureMap {
  std::size_t channels = 0, t_len = 0, f_len = 0;
  std::vector<double> v;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t t, std::size_t f)
      : channels(c), t_len(t), f_len(f), v(c * t * f, 0.0) {}

  double& at(std::size_t c, std::size_t t, std::size_t f) { return v[(c * t_len + t) * f_len + f]; }
  double at(std::size_t c, std::size_t t, std::size_t f) const { return v[(c * t_len + t) * f_len + f]; }
};

struct ConvSpec {
  std::size_t in_ch = 0, out_ch = 0, stride_f = 1;
};

// Twelve 3x3 layers in four groups of three; the last layer of each group
// strides the feature axis by 3. Time is padded same throughout.
std::vector<ConvSpec> cnn_layout(const std::array<std::size_t, 4>& channels);

// One conv + relu. Padding 1 on both axes; stride 1 in time, spec.stride_f
// in feature.
FeatureMap conv_relu_forward(const FeatureMap& in, const Tensor& w, const Tensor& b, const ConvSpec& spec);
FeatureMap conv_relu_backward(const FeatureMap& in, const FeatureMap& out, const Tensor& w,
                              const ConvSpec& spec, const FeatureMap& upstream, Tensor& dw, Tensor& db);

struct CnnCache {
  std::vector<FeatureMap> acts;  // acts[0] = input map, acts[l+1] = layer l output
};

// features [T x W] in, flattened [T x (C_last * F_last)] out.
Matrix cnn_forward(const Matrix& features, const ParameterSet& p, const ModelConfig& cfg, CnnCache* cache = nullptr);
Matrix cnn_backward(const ParameterSet& p, const ModelConfig& cfg, const CnnCache& cache,
                    const Matrix& upstream, ParameterSet& grads);

// Single-head scaled dot-product self-attention over the shared sequence,
// then a per-frame affine readout and mean pooling.
struct BranchCache {
  Matrix s, q, k, v, att, ctx;
  std::vector<double> frame_scores;
};

struct BranchOutput {
  std::vector<double> frame_scores;
  double utterance = 0.0;
};

BranchOutput branch_forward(const Matrix& s, const ParameterSet& p, const std::string& key,
                            BranchCache* cache = nullptr);

// d_frame is dL/d frame_scores (any pooling gradient already folded in);
// returns dL/dS.
Matrix branch_backward(const ParameterSet& p, const std::string& key, const BranchCache& cache,
                       const std::vector<double>& d_frame, ParameterSet& grads);

}  // namespace imti
