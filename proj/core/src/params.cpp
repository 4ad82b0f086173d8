#include "imti/params.hpp"

#include <cmath>

#include "imti/common.hpp"
#include "imti/rng.hpp"

namespace imti {

const char* variant_name(Variant v) {
  return v == Variant::cnn_blstm ? "cnn_blstm" : "cnn_slstm";
}

Variant parse_variant(const std::string& s) {
  if (s == "cnn_blstm") return Variant::cnn_blstm;
  if (s == "cnn_slstm") return Variant::cnn_slstm;
  throw ValidationError("unknown variant \"" + s + "\" (expected cnn_blstm or cnn_slstm)");
}

void ModelConfig::validate() const {
  stft.validate();
  if (embedding_dim < 2) throw ValidationError(strf("embedding_dim %zu, need at least 2", embedding_dim));
  for (std::size_t c : cnn_channels)
    if (c == 0) throw ValidationError("cnn_channels entries must be positive");
  if (recurrent_hidden == 0) throw ValidationError("recurrent_hidden must be positive");
  if (fc_width == 0) throw ValidationError("fc_width must be positive");
  if (adapter_width == 0) throw ValidationError("adapter_width must be positive");
  if (lfb_bands == 0) throw ValidationError("lfb_bands must be positive");
  if (lfb_kernel_len < 3 || lfb_kernel_len % 2 == 0)
    throw ValidationError(strf("lfb_kernel_len %zu must be odd and >= 3", lfb_kernel_len));
  if (cnn_input_width() < 81)
    throw ValidationError(strf("cnn input width %zu (stft bins %zu + %zu bands); the four stride-3 "
                               "stages need at least 81",
                               cnn_input_width(), stft_bins(), lfb_bands));
}

std::size_t ModelConfig::cnn_output_width() const {
  std::size_t w = cnn_input_width();
  for (int stage = 0; stage < 4; ++stage) w = (w - 1) / 3 + 1;
  return w;
}

Tensor& ParameterSet::at(const std::string& name) {
  auto it = blocks.find(name);
  if (it == blocks.end()) throw ValidationError("no parameter block named \"" + name + "\"");
  return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = blocks.find(name);
  if (it == blocks.end()) throw ValidationError("no parameter block named \"" + name + "\"");
  return it->second;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& [name, t] : blocks) out.blocks.emplace(name, Tensor(t.shape));
  return out;
}

void ParameterSet::fill(double value) {
  for (auto& [name, t] : blocks) std::fill(t.v.begin(), t.v.end(), value);
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& [name, t] : blocks) n += t.size();
  return n;
}

bool ParameterSet::all_finite(std::string* offending) const {
  for (const auto& [name, t] : blocks) {
    if (!t.all_finite()) {
      if (offending) *offending = name;
      return false;
    }
  }
  return true;
}

const std::array<std::string, 4>& branch_keys() {
  static const std::array<std::string, 4> k = {"int", "cer_ws", "cer_goo", "stoi"};
  return k;
}

const std::array<std::string, 4>& target_names() {
  static const std::array<std::string, 4> k = {"intelligibility", "cer_whisper", "cer_google", "stoi"};
  return k;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_shapes(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  const std::size_t b = cfg.lfb_bands;
  out.emplace_back("lfb.low_hz", std::vector<std::size_t>{b});
  out.emplace_back("lfb.band_hz", std::vector<std::size_t>{b});

  out.emplace_back("adapter.w", std::vector<std::size_t>{cfg.adapter_width, cfg.embedding_dim + 3});
  out.emplace_back("adapter.b", std::vector<std::size_t>{cfg.adapter_width});

  for (std::size_t l = 0; l < 12; ++l) {
    const std::size_t group = l / 3;
    const std::size_t out_ch = cfg.cnn_channels[group];
    const std::size_t in_ch = l == 0 ? 1 : (l % 3 == 0 ? cfg.cnn_channels[group - 1] : out_ch);
    const std::string base = strf("cnn.l%02zu", l);
    out.emplace_back(base + ".w", std::vector<std::size_t>{out_ch, in_ch, 3, 3});
    out.emplace_back(base + ".b", std::vector<std::size_t>{out_ch});
  }

  const std::size_t h = cfg.recurrent_hidden;
  const std::size_t rin = cfg.recurrent_input();
  const char* gates = cfg.variant == Variant::cnn_slstm ? "zifo" : "gifo";
  for (const char* dir : {"fwd", "bwd"}) {
    for (int gi = 0; gi < 4; ++gi) {
      const std::string base = strf("recurrent.%s.", dir);
      const char g = gates[gi];
      out.emplace_back(base + strf("w_%c", g), std::vector<std::size_t>{h, rin});
      out.emplace_back(base + strf("r_%c", g), std::vector<std::size_t>{h, h});
      out.emplace_back(base + strf("b_%c", g), std::vector<std::size_t>{h});
    }
  }

  out.emplace_back("fc.w", std::vector<std::size_t>{cfg.fc_width, 2 * h});
  out.emplace_back("fc.b", std::vector<std::size_t>{cfg.fc_width});

  for (const std::string& key : branch_keys()) {
    const std::string base = "branch." + key + ".";
    const std::size_t k = cfg.fc_width;
    out.emplace_back(base + "wq", std::vector<std::size_t>{k, cfg.fc_width});
    out.emplace_back(base + "bq", std::vector<std::size_t>{k});
    out.emplace_back(base + "wk", std::vector<std::size_t>{k, cfg.fc_width});
    out.emplace_back(base + "bk", std::vector<std::size_t>{k});
    out.emplace_back(base + "wv", std::vector<std::size_t>{k, cfg.fc_width});
    out.emplace_back(base + "bv", std::vector<std::size_t>{k});
    out.emplace_back(base + "w_out", std::vector<std::size_t>{1, k});
    out.emplace_back(base + "b_out", std::vector<std::size_t>{1});
  }
  return out;
}

ParameterSet zero_parameters(const ModelConfig& cfg) {
  ParameterSet p;
  for (const auto& [name, shape] : parameter_shapes(cfg)) p.blocks.emplace(name, Tensor(shape));
  return p;
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, n);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();

  // modified Gram-Schmidt on rows, restarted in the (measure-zero) case of a
  // dependent draw
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t prev = 0; prev < r; ++prev) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += m(r, c) * m(prev, c);
      for (std::size_t c = 0; c < n; ++c) m(r, c) -= dot * m(prev, c);
    }
    double norm = 0.0;
    for (std::size_t c = 0; c < n; ++c) norm += m(r, c) * m(r, c);
    norm = std::sqrt(norm);
    if (norm < 1e-12) return random_orthogonal(n, seed + 0x51ed2701);
    for (std::size_t c = 0; c < n; ++c) m(r, c) /= norm;
  }
  return m;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void glorot_fill(Tensor& t, Rng& rng) {
  std::size_t fan_in, fan_out;
  if (t.rank() == 4) {
    fan_out = t.shape[0] * t.shape[2] * t.shape[3];
    fan_in = t.shape[1] * t.shape[2] * t.shape[3];
  } else {
    fan_out = t.shape[0];
    fan_in = t.shape[1];
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.v) v = rng.uniform(-limit, limit);
}

}  // namespace

ParameterSet init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  ParameterSet p = zero_parameters(cfg);
  const SincFilterbankParams fb = mel_init_filterbank(cfg.lfb_bands, cfg.lfb_kernel_len);
  store_filterbank(p, fb);

  Rng root(seed);
  for (const auto& [name, shape] : parameter_shapes(cfg)) {
    Rng block_rng = root.fork();
    Tensor& t = p.at(name);
    if (name.rfind("lfb.", 0) == 0) continue;  // mel init above, no random draw
    const bool is_recurrent_kernel =
        name.rfind("recurrent.", 0) == 0 && name.find(".r_") != std::string::npos;
    const bool is_bias = shape.size() == 1 || ends_with(name, "b_out");
    if (is_recurrent_kernel) {
      const Matrix q = random_orthogonal(shape[0], block_rng.bits());
      t.v.assign(q.data(), q.data() + q.size());
    } else if (is_bias) {
      // zeros, except forget-gate biases start open
      if (name.find(".b_f") != std::string::npos) std::fill(t.v.begin(), t.v.end(), 1.0);
    } else {
      glorot_fill(t, block_rng);
    }
  }
  return p;
}

namespace {

void bind_recurrent(const ParameterSet& p, const std::string& dir, const char* gates,
                    RecurrentParams& out) {
  const std::string base = "recurrent." + dir + ".";
  for (int gi = 0; gi < 4; ++gi) {
    const char g = gates[gi];
    const Tensor& w = p.at(base + strf("w_%c", g));
    const Tensor& r = p.at(base + strf("r_%c", g));
    const Tensor& b = p.at(base + strf("b_%c", g));
    out.w[gi] = w.data();
    out.r[gi] = r.data();
    out.b[gi] = b.data();
    out.hidden = w.shape[0];
    out.input = w.shape[1];
  }
}

}  // namespace

SlstmParams slstm_view(const ParameterSet& p, const std::string& dir, ForgetMode mode) {
  SlstmParams out;
  out.forget_mode = mode;
  bind_recurrent(p, dir, "zifo", out.rec);
  return out;
}

RecurrentParams lstm_view(const ParameterSet& p, const std::string& dir) {
  RecurrentParams out;
  bind_recurrent(p, dir, "gifo", out);
  return out;
}

RecurrentGrads recurrent_grad_view(ParameterSet& g, const std::string& dir, Variant variant) {
  const char* gates = variant == Variant::cnn_slstm ? "zifo" : "gifo";
  const std::string base = "recurrent." + dir + ".";
  RecurrentGrads out;
  for (int gi = 0; gi < 4; ++gi) {
    const char gc = gates[gi];
    out.w[gi] = g.at(base + strf("w_%c", gc)).data();
    out.r[gi] = g.at(base + strf("r_%c", gc)).data();
    out.b[gi] = g.at(base + strf("b_%c", gc)).data();
  }
  return out;
}

SincFilterbankParams filterbank_view(const ParameterSet& p, std::size_t kernel_len) {
  SincFilterbankParams fb;
  fb.kernel_len = kernel_len;
  const Tensor& low = p.at("lfb.low_hz");
  const Tensor& band = p.at("lfb.band_hz");
  fb.low_hz = low.v;
  fb.band_hz = band.v;
  fb.validate();
  return fb;
}

void store_filterbank(ParameterSet& p, const SincFilterbankParams& fb) {
  p.at("lfb.low_hz").v = fb.low_hz;
  p.at("lfb.band_hz").v = fb.band_hz;
}

}  // namespace imti
