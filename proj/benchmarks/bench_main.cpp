#include <benchmark/benchmark.h>

#include <vector>

#include "imti/adam.hpp"
#include "imti/loss.hpp"
#include "imti/metrics.hpp"
#include "imti/params.hpp"
#include "imti/recurrent.hpp"
#include "imti/rng.hpp"
#include "imti/sinc.hpp"
#include "imti/stats.hpp"
#include "imti/stft.hpp"
#include "imti/trainer.hpp"

namespace {

using namespace imti;

ModelConfig bench_model(Variant variant = Variant::cnn_slstm) {
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

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Owning weights for a standalone recurrent direction.
struct CellWeights {
  std::vector<double> w[4], r[4], b[4];
  SlstmParams params;

  CellWeights(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    Rng rng(seed);
    params.rec.input = input;
    params.rec.hidden = hidden;
    for (int g = 0; g < 4; ++g) {
      w[g].resize(hidden * input);
      r[g].resize(hidden * hidden);
      b[g].resize(hidden);
      for (double& v : w[g]) v = rng.uniform(-0.3, 0.3);
      for (double& v : r[g]) v = rng.uniform(-0.3, 0.3);
      for (double& v : b[g]) v = rng.uniform(-0.3, 0.3);
      params.rec.w[g] = w[g].data();
      params.rec.r[g] = r[g].data();
      params.rec.b[g] = b[g].data();
    }
  }
};

void bm_slstm_sequence(benchmark::State& state) {
  const std::size_t T = static_cast<std::size_t>(state.range(0)), H = 16, I = 32;
  const CellWeights cw(I, H, 1);
  const Matrix x = random_matrix(T, I, 2);
  for (auto _ : state) {
    Matrix h = slstm_forward(x, cw.params);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * T);
}
BENCHMARK(bm_slstm_sequence)->Arg(16)->Arg(64)->Arg(256);

void bm_slstm_backward(benchmark::State& state) {
  const std::size_t T = static_cast<std::size_t>(state.range(0)), H = 16, I = 32;
  const CellWeights cw(I, H, 1);
  const Matrix x = random_matrix(T, I, 2);
  const Matrix upstream = random_matrix(T, H, 3);

  std::vector<double> gw[4], gr[4], gb[4];
  RecurrentGrads grads;
  for (int g = 0; g < 4; ++g) {
    gw[g].resize(H * I);
    gr[g].resize(H * H);
    gb[g].resize(H);
    grads.w[g] = gw[g].data();
    grads.r[g] = gr[g].data();
    grads.b[g] = gb[g].data();
  }
  for (auto _ : state) {
    SlstmSequenceCache cache;
    Matrix h = slstm_forward(x, cw.params, &cache);
    Matrix dx = slstm_backward(cw.params, cache, upstream, grads);
    benchmark::DoNotOptimize(dx.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * T);
}
BENCHMARK(bm_slstm_backward)->Arg(16)->Arg(64);

void bm_stft(benchmark::State& state) {
  StftConfig cfg;
  cfg.fft_size = 512;
  cfg.hop = 256;
  Waveform w;
  Rng rng(4);
  w.samples.resize(static_cast<std::size_t>(state.range(0)));
  for (double& s : w.samples) s = 0.5 * rng.normal();
  for (auto _ : state) {
    SpectralFeatures spec = stft_magnitude(w, cfg);
    benchmark::DoNotOptimize(spec.frames.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_stft)->Arg(16000)->Arg(64000);

void bm_sinc_filterbank(benchmark::State& state) {
  const SincFilterbankParams fb = mel_init_filterbank(16, 65);
  Waveform w;
  Rng rng(5);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  w.samples.resize(n);
  for (double& s : w.samples) s = 0.5 * rng.normal();
  for (auto _ : state) {
    Matrix out = sinc_filterbank_forward(w, fb, 128, n / 128);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(bm_sinc_filterbank)->Arg(16000);

void bm_frame_stats(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  std::vector<double> x(d);
  for (double& v : x) v = rng.uniform(-30.0, 30.0);
  for (auto _ : state) {
    FrameStats fs = frame_stats(x);
    benchmark::DoNotOptimize(fs);
  }
}
BENCHMARK(bm_frame_stats)->Arg(8)->Arg(384)->Arg(1280);

void bm_metrics(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(0.0, 1.0);
    b[i] = rng.uniform(0.0, 1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(pearson_lcc(a, b));
    benchmark::DoNotOptimize(spearman_srcc(a, b));
    benchmark::DoNotOptimize(mean_squared_error(a, b));
  }
}
BENCHMARK(bm_metrics)->Arg(200)->Arg(2000);

void bm_model_forward(benchmark::State& state) {
  const ModelConfig mc = bench_model(state.range(0) == 0 ? Variant::cnn_slstm : Variant::cnn_blstm);
  const ParameterSet params = init_parameters(mc, 8);
  const UtteranceData u = synthetic_utterance(mc, 9, 30);
  for (auto _ : state) {
    PredictionBundle pb = predict_utterance(u, params, mc);
    benchmark::DoNotOptimize(pb.targets[0].utterance);
  }
}
BENCHMARK(bm_model_forward)->Arg(0)->Arg(1);

void bm_model_grads(benchmark::State& state) {
  const ModelConfig mc = bench_model();
  const ParameterSet params = init_parameters(mc, 8);
  const UtteranceData u = synthetic_utterance(mc, 9, 30);
  const LossWeights w;
  ParameterSet grads = params.zeros_like();
  for (auto _ : state) {
    grads.fill(0.0);
    benchmark::DoNotOptimize(utterance_loss_and_grads(u, params, mc, w, grads));
  }
}
BENCHMARK(bm_model_grads);

void bm_adam_step(benchmark::State& state) {
  const ModelConfig mc = bench_model();
  ParameterSet params = init_parameters(mc, 8);
  ParameterSet grads = params.zeros_like();
  Rng rng(10);
  for (auto& [name, t] : grads.blocks)
    for (double& g : t.v) g = 0.01 * rng.normal();
  OptimizerState opt = OptimizerState::zero(params);
  for (auto _ : state) {
    adam_update(params, grads, opt, 1e-4);
    benchmark::DoNotOptimize(opt.step);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(params.total_size()));
}
BENCHMARK(bm_adam_step);

}  // namespace

BENCHMARK_MAIN();
