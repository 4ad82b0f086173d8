#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <doctest.h>

#include "imti/common.hpp"
#include "imti/gradcheck.hpp"
#include "imti/layers.hpp"
#include "imti/network.hpp"
#include "imti/params.hpp"
#include "imti/rng.hpp"
#include "imti/tensor.hpp"
#include "imti/trainer.hpp"

using namespace imti;

namespace {

// Small end-to-end dimensions: 65 stft bins + 16 bands = 81, the narrowest
// width the four stride-3 stages accept.
ModelConfig toy_config(Variant variant = Variant::cnn_slstm) {
  ModelConfig mc;
  mc.variant = variant;
  mc.embedding_dim = 8;
  mc.cnn_channels = {4, 8, 12, 16};
  mc.recurrent_hidden = 16;
  mc.fc_width = 16;
  mc.adapter_width = 16;
  mc.stft.fft_size = 128;
  mc.stft.hop = 128;
  mc.lfb_bands = 16;
  mc.lfb_kernel_len = 65;
  return mc;
}

void fd_check(const std::string& label, std::vector<double>& coords,
              const std::vector<double>& analytic, const std::function<double()>& loss) {
  const double step = 1e-6;
  REQUIRE(coords.size() == analytic.size());
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const double keep = coords[k];
    coords[k] = keep + step;
    const double up = loss();
    coords[k] = keep - step;
    const double dn = loss();
    coords[k] = keep;
    const double fd = (up - dn) / (2.0 * step);
    const double err = std::fabs(analytic[k] - fd);
    const double gate = std::max(1e-7, 1e-5 * std::max(std::fabs(analytic[k]), std::fabs(fd)));
    INFO(label, "[", k, "]: analytic ", analytic[k], " vs fd ", fd);
    CHECK(err <= gate);
  }
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  for (double& v : t.v) v = rng.uniform(-scale, scale);
  return t;
}

ParameterSet branch_params(std::size_t width, Rng& rng) {
  ParameterSet p;
  const std::string base = "branch.int.";
  p.blocks.emplace(base + "wq", random_tensor({width, width}, rng, 0.8));
  p.blocks.emplace(base + "bq", random_tensor({width}, rng, 0.5));
  p.blocks.emplace(base + "wk", random_tensor({width, width}, rng, 0.8));
  p.blocks.emplace(base + "bk", random_tensor({width}, rng, 0.5));
  p.blocks.emplace(base + "wv", random_tensor({width, width}, rng, 0.8));
  p.blocks.emplace(base + "bv", random_tensor({width}, rng, 0.5));
  p.blocks.emplace(base + "w_out", random_tensor({1, width}, rng, 0.8));
  p.blocks.emplace(base + "b_out", random_tensor({1}, rng, 0.5));
  return p;
}

}  // namespace

TEST_CASE("conv stack layout strides once per group") {
  const std::array<std::size_t, 4> channels = {4, 8, 12, 16};
  const std::vector<ConvSpec> specs = cnn_layout(channels);
  REQUIRE(specs.size() == 12);
  for (std::size_t l = 0; l < 12; ++l) {
    const std::size_t group = l / 3;
    CHECK(specs[l].out_ch == channels[group]);
    CHECK(specs[l].in_ch == (l == 0 ? 1 : (l % 3 == 0 ? channels[group - 1] : channels[group])));
    CHECK(specs[l].stride_f == (l % 3 == 2 ? 3u : 1u));
  }
}

TEST_CASE("config width arithmetic") {
  ModelConfig mc = toy_config();
  CHECK(mc.stft_bins() == 65);
  CHECK(mc.cnn_input_width() == 81);  // 81 -> 27 -> 9 -> 3 -> 1
  CHECK(mc.cnn_output_width() == 1);
  CHECK(mc.cnn_features() == 16);
  CHECK(mc.recurrent_input() == 32);
  CHECK_NOTHROW(mc.validate());

  ModelConfig def;
  def.embedding_dim = 8;
  CHECK(def.cnn_input_width() == 321);  // 321 -> 107 -> 36 -> 12 -> 4
  CHECK(def.cnn_output_width() == 4);
  CHECK(def.cnn_features() == 512);

  ModelConfig narrow = toy_config();
  narrow.lfb_bands = 15;  // width 80, one short of the minimum
  CHECK_THROWS_AS(narrow.validate(), ValidationError);

  ModelConfig bad = toy_config();
  bad.embedding_dim = 1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = toy_config();
  bad.lfb_kernel_len = 64;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("a center tap kernel copies its input through the rectifier") {
  FeatureMap in(1, 2, 9);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t f = 0; f < 9; ++f) in.at(0, t, f) = static_cast<double>(t * 9 + f) - 4.0;

  Tensor w({1, 1, 3, 3});
  w.v[4] = 1.0;  // center of the 3x3 kernel
  Tensor b({1});

  ConvSpec spec{1, 1, 1};
  const FeatureMap out = conv_relu_forward(in, w, b, spec);
  REQUIRE(out.f_len == 9);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t f = 0; f < 9; ++f)
      CHECK(out.at(0, t, f) == std::max(0.0, in.at(0, t, f)));

  ConvSpec strided{1, 1, 3};
  const FeatureMap out3 = conv_relu_forward(in, w, b, strided);
  REQUIRE(out3.f_len == 3);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t f = 0; f < 3; ++f)
      CHECK(out3.at(0, t, f) == std::max(0.0, in.at(0, t, 3 * f)));
}

TEST_CASE("zero kernels leave only the bias") {
  FeatureMap in(2, 3, 5);
  for (std::size_t i = 0; i < in.v.size(); ++i) in.v[i] = static_cast<double>(i);
  Tensor w({1, 2, 3, 3});
  Tensor b({1});

  ConvSpec spec{2, 1, 1};
  b.v[0] = 0.25;
  FeatureMap out = conv_relu_forward(in, w, b, spec);
  for (double v : out.v) CHECK(v == 0.25);

  b.v[0] = -0.25;
  out = conv_relu_forward(in, w, b, spec);
  for (double v : out.v) CHECK(v == 0.0);

  Tensor wrong({1, 2, 3, 5});
  CHECK_THROWS_AS(conv_relu_forward(in, wrong, b, spec), ValidationError);
}

TEST_CASE("conv gradients match central differences") {
  Rng rng(61);
  for (std::size_t stride : {1ul, 3ul}) {
    FeatureMap in(2, 3, 5);
    for (double& v : in.v) v = rng.uniform(-1.0, 1.0);
    Tensor w = random_tensor({2, 2, 3, 3}, rng, 0.6);
    Tensor b = random_tensor({2}, rng, 0.3);
    const ConvSpec spec{2, 2, stride};

    const FeatureMap out0 = conv_relu_forward(in, w, b, spec);
    FeatureMap upstream(2, 3, out0.f_len);
    for (double& v : upstream.v) v = rng.uniform(0.2, 1.0);

    auto loss = [&]() {
      const FeatureMap out = conv_relu_forward(in, w, b, spec);
      double s = 0.0;
      for (std::size_t i = 0; i < out.v.size(); ++i) s += upstream.v[i] * out.v[i];
      return s;
    };

    Tensor dw({2, 2, 3, 3}), db({2});
    const FeatureMap din = conv_relu_backward(in, out0, w, spec, upstream, dw, db);

    fd_check("conv.w", w.v, dw.v, loss);
    fd_check("conv.b", b.v, db.v, loss);
    fd_check("conv.x", in.v, din.v, loss);
  }
}

TEST_CASE("affine relu layer behaviors and gradients") {
  Tensor ident({2, 2});
  ident.at(0, 0) = 1.0;
  ident.at(1, 1) = 1.0;
  Tensor zero_b({2});
  Matrix x(2, 2);
  x(0, 0) = 1.5;
  x(0, 1) = -2.0;
  x(1, 0) = -0.5;
  x(1, 1) = 0.25;
  const Matrix y = affine_relu_forward(x, ident, zero_b);
  CHECK(y(0, 0) == 1.5);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(1, 0) == 0.0);
  CHECK(y(1, 1) == 0.25);

  Tensor zero_w({2, 2});
  Tensor bias({2});
  bias.v = {0.5, -0.5};
  const Matrix z = affine_relu_forward(x, zero_w, bias);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(z(r, 0) == 0.5);
    CHECK(z(r, 1) == 0.0);
  }

  Matrix bad(2, 3);
  CHECK_THROWS_AS(affine_relu_forward(bad, ident, zero_b), ValidationError);

  Rng rng(67);
  Matrix xs(4, 3);
  for (std::size_t i = 0; i < xs.size(); ++i) xs.data()[i] = rng.uniform(-1.0, 1.0);
  Tensor w = random_tensor({2, 3}, rng, 0.8);
  Tensor b = random_tensor({2}, rng, 0.4);
  Matrix upstream(4, 2);
  for (std::size_t i = 0; i < upstream.size(); ++i) upstream.data()[i] = rng.uniform(0.2, 1.0);

  auto loss = [&]() {
    const Matrix out = affine_relu_forward(xs, w, b);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += upstream.data()[i] * out.data()[i];
    return s;
  };

  AffineReluCache cache;
  affine_relu_forward(xs, w, b, &cache);
  Tensor dw({2, 3}), db({2});
  const Matrix dx = affine_relu_backward(w, cache, upstream, dw, db);

  fd_check("affine.w", w.v, dw.v, loss);
  fd_check("affine.b", b.v, db.v, loss);
  std::vector<double> x_flat(xs.data(), xs.data() + xs.size());
  std::vector<double> dx_flat(dx.data(), dx.data() + dx.size());
  auto loss_x = [&]() {
    for (std::size_t i = 0; i < xs.size(); ++i) xs.data()[i] = x_flat[i];
    return loss();
  };
  fd_check("affine.x", x_flat, dx_flat, loss_x);
}

TEST_CASE("single frame attention reduces to the value readout") {
  Rng rng(71);
  ParameterSet p = branch_params(3, rng);
  Matrix s(1, 3);
  s(0, 0) = 0.4;
  s(0, 1) = -0.9;
  s(0, 2) = 0.3;

  const BranchOutput out = branch_forward(s, p, "int");
  REQUIRE(out.frame_scores.size() == 1);
  CHECK(out.utterance == out.frame_scores[0]);

  const Tensor& wv = p.at("branch.int.wv");
  const Tensor& bv = p.at("branch.int.bv");
  const Tensor& w_out = p.at("branch.int.w_out");
  const Tensor& b_out = p.at("branch.int.b_out");
  double want = b_out[0];
  for (std::size_t j = 0; j < 3; ++j) {
    double vj = bv[j];
    for (std::size_t c = 0; c < 3; ++c) vj += wv.at(j, c) * s(0, c);
    want += w_out[j] * vj;
  }
  CHECK(out.frame_scores[0] == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("identical frames score identically") {
  Rng rng(73);
  ParameterSet p = branch_params(3, rng);
  Matrix s(4, 3);
  for (std::size_t t = 0; t < 4; ++t) {
    s(t, 0) = 0.2;
    s(t, 1) = -0.6;
    s(t, 2) = 1.1;
  }
  const BranchOutput out = branch_forward(s, p, "int");
  for (double f : out.frame_scores) CHECK(std::fabs(f - out.utterance) < 1e-13);

  // attention over identical keys is uniform
  BranchCache cache;
  branch_forward(s, p, "int", &cache);
  for (std::size_t i = 0; i < cache.att.size(); ++i)
    CHECK(cache.att.data()[i] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("attention ignores a uniform key bias shift") {
  Rng rng(79);
  ParameterSet p = branch_params(4, rng);
  Matrix s(5, 4);
  for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-1.0, 1.0);

  const BranchOutput base = branch_forward(s, p, "int");
  for (double& v : p.at("branch.int.bk").v) v += 3.0;
  const BranchOutput moved = branch_forward(s, p, "int");
  for (std::size_t t = 0; t < 5; ++t)
    CHECK(std::fabs(base.frame_scores[t] - moved.frame_scores[t]) < 1e-12);
}

TEST_CASE("branch gradients match central differences") {
  Rng rng(83);
  ParameterSet p = branch_params(3, rng);
  Matrix s(4, 3);
  for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-1.0, 1.0);
  std::vector<double> d_frame(4);
  for (double& v : d_frame) v = rng.uniform(-1.0, 1.0);

  auto loss = [&]() {
    const BranchOutput out = branch_forward(s, p, "int");
    double sum = 0.0;
    for (std::size_t t = 0; t < 4; ++t) sum += d_frame[t] * out.frame_scores[t];
    return sum;
  };

  BranchCache cache;
  branch_forward(s, p, "int", &cache);
  ParameterSet grads = p.zeros_like();
  const Matrix ds = branch_backward(p, "int", cache, d_frame, grads);

  // key bias coordinates are exactly flat (their shift cancels in the row
  // softmax); the absolute floor in fd_check absorbs them
  for (auto& [name, t] : p.blocks) fd_check(name, t.v, grads.at(name).v, loss);

  std::vector<double> s_flat(s.data(), s.data() + s.size());
  std::vector<double> ds_flat(ds.data(), ds.data() + ds.size());
  auto loss_s = [&]() {
    for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] = s_flat[i];
    return loss();
  };
  fd_check("s", s_flat, ds_flat, loss_s);

  CHECK_THROWS_AS(branch_backward(p, "int", cache, std::vector<double>(3, 0.0), grads), ValidationError);
}

TEST_CASE("initialization fills every declared block with its documented shape") {
  const ModelConfig mc = toy_config();
  const ParameterSet p = init_parameters(mc, 5);

  const auto shapes = parameter_shapes(mc);
  CHECK(shapes.size() == p.blocks.size());
  std::size_t total = 0;
  for (const auto& [name, shape] : shapes) {
    REQUIRE(p.has(name));
    CHECK(p.at(name).shape == shape);
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    total += n;
  }
  CHECK(p.total_size() == total);
  CHECK(p.all_finite());

  // biases start closed except the forget gate
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string base = std::string("recurrent.") + dir + ".";
    for (double v : p.at(base + "b_f").v) CHECK(v == 1.0);
    for (double v : p.at(base + "b_z").v) CHECK(v == 0.0);
    for (double v : p.at(base + "b_i").v) CHECK(v == 0.0);
    for (double v : p.at(base + "b_o").v) CHECK(v == 0.0);
  }
  for (double v : p.at("fc.b").v) CHECK(v == 0.0);
  for (double v : p.at("adapter.b").v) CHECK(v == 0.0);
  for (double v : p.at("branch.int.b_out").v) CHECK(v == 0.0);

  // recurrent kernels are orthonormal
  const Tensor& r = p.at("recurrent.fwd.r_z");
  const std::size_t h = mc.recurrent_hidden;
  for (std::size_t a = 0; a < h; ++a)
    for (std::size_t bb = 0; bb < h; ++bb) {
      double dot = 0.0;
      for (std::size_t c = 0; c < h; ++c) dot += r.at(a, c) * r.at(bb, c);
      CHECK(std::fabs(dot - (a == bb ? 1.0 : 0.0)) < 1e-10);
    }

  // dense blocks stay inside their fan-scaled range
  const Tensor& fc = p.at("fc.w");
  const double limit = std::sqrt(6.0 / static_cast<double>(fc.shape[0] + fc.shape[1]));
  for (double v : fc.v) CHECK(std::fabs(v) <= limit);

  // the filterbank starts at the mel grid
  const SincFilterbankParams fb = mel_init_filterbank(mc.lfb_bands, mc.lfb_kernel_len);
  CHECK(p.at("lfb.low_hz").v == fb.low_hz);
  CHECK(p.at("lfb.band_hz").v == fb.band_hz);

  // deterministic in the seed
  const ParameterSet again = init_parameters(mc, 5);
  for (const auto& [name, t] : p.blocks) CHECK(again.at(name).v == t.v);
  const ParameterSet other = init_parameters(mc, 6);
  bool any_diff = false;
  for (const auto& [name, t] : p.blocks)
    if (other.at(name).v != t.v) any_diff = true;
  CHECK(any_diff);

  CHECK_THROWS_AS(p.at("no.such.block"), ValidationError);
}

TEST_CASE("orthogonal draws are orthonormal") {
  const Matrix q = random_orthogonal(8, 3);
  for (std::size_t a = 0; a < 8; ++a)
    for (std::size_t b = 0; b < 8; ++b) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 8; ++c) dot += q(a, c) * q(b, c);
      CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("filterbank parameters round-trip through the parameter set") {
  const ModelConfig mc = toy_config();
  ParameterSet p = init_parameters(mc, 7);
  SincFilterbankParams fb = mel_init_filterbank(16, 65);
  for (double& v : fb.low_hz) v += 1.5;
  store_filterbank(p, fb);
  const SincFilterbankParams back = filterbank_view(p, 65);
  CHECK(back.low_hz == fb.low_hz);
  CHECK(back.band_hz == fb.band_hz);
  CHECK(back.kernel_len == 65);
}

TEST_CASE("model forward produces mean-pooled scores for every target") {
  const ModelConfig mc = toy_config();
  const UtteranceData u = synthetic_utterance(mc, 11);
  const ParameterSet p = init_parameters(mc, 3);

  const PredictionBundle out = model_forward(u.wave, u.stft_mag, u.aug, p, mc);
  for (std::size_t k = 0; k < 4; ++k) {
    const BranchOutput& b = out.targets[k];
    REQUIRE(!b.frame_scores.empty());
    double mean = 0.0;
    for (double f : b.frame_scores) mean += f;
    mean /= static_cast<double>(b.frame_scores.size());
    CHECK(std::fabs(b.utterance - mean) < 1e-12);
  }

  // deterministic
  const PredictionBundle again = model_forward(u.wave, u.stft_mag, u.aug, p, mc);
  for (std::size_t k = 0; k < 4; ++k) CHECK(again.targets[k].utterance == out.targets[k].utterance);

  // both recurrent variants run on the same features
  const ModelConfig mb = toy_config(Variant::cnn_blstm);
  const ParameterSet pb = init_parameters(mb, 3);
  const PredictionBundle out_b = model_forward(u.wave, u.stft_mag, u.aug, pb, mb);
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::isfinite(out_b.targets[k].utterance));

  Matrix bad_stft(u.stft_mag.rows(), 64);
  CHECK_THROWS_AS(model_forward(u.wave, bad_stft, u.aug, p, mc), ValidationError);
}

TEST_CASE("prediction bundles reject drifting pool values") {
  PredictionBundle b;
  for (std::size_t k = 0; k < 4; ++k) {
    b.targets[k].frame_scores = {0.2, 0.4};
    b.targets[k].utterance = 0.3;
  }
  CHECK_NOTHROW(b.validate());
  b.targets[2].utterance = 0.5;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  b.targets[2].utterance = 0.3;
  b.targets[1].frame_scores.clear();
  CHECK_THROWS_AS(b.validate(), ValidationError);
}

TEST_CASE("whole model gradients survive a finite difference audit") {
  GradCheckOptions opt;
  opt.seed = 14;  // places the sampled probes away from rectifier kinks at these dims
  const GradCheckReport report = model_gradcheck(toy_config(), LossWeights{}, opt);
  REQUIRE(!report.blocks.empty());
  INFO("worst block ", report.worst().name, " err ", report.worst().max_rel_err);
  CHECK(report.passed());
  CHECK(report.worst().max_rel_err < opt.tol);
}