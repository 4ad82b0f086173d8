#include "imti/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "imti/common.hpp"

namespace imti {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t parse_uint(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  auto [p, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || p != end)
    throw ValidationError("key \"" + key + "\": \"" + v + "\" is not a non-negative integer");
  return out;
}

double parse_num(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty())
    throw ValidationError("key \"" + key + "\": \"" + v + "\" is not a number");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(v);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  return out;
}

bool apply_model_key(ModelConfig& m, const std::string& key, const std::string& value) {
  if (key == "model.variant") m.variant = parse_variant(value);
  else if (key == "model.forget_mode") m.forget_mode = parse_forget_mode(value);
  else if (key == "model.embedding_dim") m.embedding_dim = parse_uint(value, key);
  else if (key == "model.cnn_channels") {
    const std::vector<std::string> parts = split_list(value);
    if (parts.size() != 4) throw ValidationError("model.cnn_channels needs exactly 4 entries");
    for (std::size_t i = 0; i < 4; ++i) m.cnn_channels[i] = parse_uint(parts[i], key);
  } else if (key == "model.recurrent_hidden") m.recurrent_hidden = parse_uint(value, key);
  else if (key == "model.fc_width") m.fc_width = parse_uint(value, key);
  else if (key == "model.adapter_width") m.adapter_width = parse_uint(value, key);
  else if (key == "model.stft_fft") m.stft.fft_size = parse_uint(value, key);
  else if (key == "model.stft_hop") m.stft.hop = parse_uint(value, key);
  else if (key == "model.stft_window") m.stft.window = parse_window(value);
  else if (key == "model.lfb_bands") m.lfb_bands = parse_uint(value, key);
  else if (key == "model.lfb_kernel_len") m.lfb_kernel_len = parse_uint(value, key);
  else return false;
  return true;
}

bool apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (apply_model_key(c.model, key, value)) return true;
  if (key == "train.learning_rate") c.train.learning_rate = parse_num(value, key);
  else if (key == "train.batch_size") c.train.batch_size = parse_uint(value, key);
  else if (key == "train.max_epochs") c.train.max_epochs = parse_uint(value, key);
  else if (key == "train.patience") c.train.patience = parse_uint(value, key);
  else if (key == "train.seed") c.train.seed = parse_uint(value, key);
  else if (key == "train.gamma") {
    const std::vector<std::string> parts = split_list(value);
    if (parts.size() != 4) throw ValidationError("train.gamma needs exactly 4 entries");
    for (std::size_t i = 0; i < 4; ++i) c.train.loss.gamma[i] = parse_num(parts[i], key);
  } else if (key == "train.frame_weight") c.train.loss.frame_weight = parse_num(value, key);
  else if (key == "synth.n_train") c.synth.n_train = parse_uint(value, key);
  else if (key == "synth.n_val") c.synth.n_val = parse_uint(value, key);
  else if (key == "synth.n_test") c.synth.n_test = parse_uint(value, key);
  else if (key == "synth.embedding_dim") c.synth.embedding_dim = parse_uint(value, key);
  else if (key == "synth.t_min") c.synth.t_min = parse_uint(value, key);
  else if (key == "synth.t_max") c.synth.t_max = parse_uint(value, key);
  else if (key == "synth.seed") c.synth.seed = parse_uint(value, key);
  else if (key == "gradcheck.step") c.gradcheck.step = parse_num(value, key);
  else if (key == "gradcheck.tol") c.gradcheck.tol = parse_num(value, key);
  else if (key == "gradcheck.coords_per_block") c.gradcheck.coords_per_block = parse_uint(value, key);
  else if (key == "gradcheck.seed") c.gradcheck.seed = parse_uint(value, key);
  else if (key == "gradcheck.anchor") c.gradcheck.anchor = parse_num(value, key);
  else if (key == "gradcheck.jitter") c.gradcheck.jitter = parse_num(value, key);
  else return false;
  return true;
}

template <typename Apply>
void parse_lines(const std::string& text, const std::string& origin, Apply&& apply) {
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError(strf("%s:%zu: expected key=value", origin.c_str(), lineno));
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ValidationError(strf("%s:%zu: empty key", origin.c_str(), lineno));
    if (!apply(key, value))
      throw ValidationError(strf("%s:%zu: unknown key \"%s\"", origin.c_str(), lineno, key.c_str()));
  }
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  parse_lines(text, origin, [&](const std::string& k, const std::string& v) { return apply_key(cfg, k, v); });
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path.string());
}

std::string render_model_config(const ModelConfig& m) {
  std::string s;
  s += strf("model.variant = %s\n", variant_name(m.variant));
  s += strf("model.forget_mode = %s\n", forget_mode_name(m.forget_mode));
  s += strf("model.embedding_dim = %zu\n", m.embedding_dim);
  s += strf("model.cnn_channels = %zu,%zu,%zu,%zu\n", m.cnn_channels[0], m.cnn_channels[1],
            m.cnn_channels[2], m.cnn_channels[3]);
  s += strf("model.recurrent_hidden = %zu\n", m.recurrent_hidden);
  s += strf("model.fc_width = %zu\n", m.fc_width);
  s += strf("model.adapter_width = %zu\n", m.adapter_width);
  s += strf("model.stft_fft = %zu\n", m.stft.fft_size);
  s += strf("model.stft_hop = %zu\n", m.stft.hop);
  s += strf("model.stft_window = %s\n", window_name(m.stft.window));
  s += strf("model.lfb_bands = %zu\n", m.lfb_bands);
  s += strf("model.lfb_kernel_len = %zu\n", m.lfb_kernel_len);
  return s;
}

ModelConfig parse_model_config_text(const std::string& text, const std::string& origin) {
  ModelConfig m;
  parse_lines(text, origin,
              [&](const std::string& k, const std::string& v) { return apply_model_key(m, k, v); });
  return m;
}

std::string render_run_config(const RunConfig& c) {
  std::string s = render_model_config(c.model);
  s += strf("train.learning_rate = %s\n", format_double(c.train.learning_rate).c_str());
  s += strf("train.batch_size = %zu\n", c.train.batch_size);
  s += strf("train.max_epochs = %zu\n", c.train.max_epochs);
  s += strf("train.patience = %zu\n", c.train.patience);
  s += strf("train.seed = %llu\n", static_cast<unsigned long long>(c.train.seed));
  s += strf("train.gamma = %s,%s,%s,%s\n", format_double(c.train.loss.gamma[0]).c_str(),
            format_double(c.train.loss.gamma[1]).c_str(), format_double(c.train.loss.gamma[2]).c_str(),
            format_double(c.train.loss.gamma[3]).c_str());
  s += strf("train.frame_weight = %s\n", format_double(c.train.loss.frame_weight).c_str());
  s += strf("synth.n_train = %zu\n", c.synth.n_train);
  s += strf("synth.n_val = %zu\n", c.synth.n_val);
  s += strf("synth.n_test = %zu\n", c.synth.n_test);
  s += strf("synth.embedding_dim = %zu\n", c.synth.embedding_dim);
  s += strf("synth.t_min = %zu\n", c.synth.t_min);
  s += strf("synth.t_max = %zu\n", c.synth.t_max);
  s += strf("synth.seed = %llu\n", static_cast<unsigned long long>(c.synth.seed));
  s += strf("gradcheck.step = %s\n", format_double(c.gradcheck.step).c_str());
  s += strf("gradcheck.tol = %s\n", format_double(c.gradcheck.tol).c_str());
  s += strf("gradcheck.coords_per_block = %zu\n", c.gradcheck.coords_per_block);
  s += strf("gradcheck.seed = %llu\n", static_cast<unsigned long long>(c.gradcheck.seed));
  s += strf("gradcheck.anchor = %s\n", format_double(c.gradcheck.anchor).c_str());
  s += strf("gradcheck.jitter = %s\n", format_double(c.gradcheck.jitter).c_str());
  return s;
}

void write_effective_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write config: " + path.string());
  out << render_run_config(cfg);
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace imti
