#include "imti/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "imti/common.hpp"
#include "imti/runconfig.hpp"

namespace imti {

namespace {

constexpr char kMagic[4] = {'I', 'M', 'T', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& s, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(x >> (8 * i) & 0xff));
}

void put_u64(std::string& s, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>(x >> (8 * i) & 0xff));
}

void put_f64(std::string& s, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(s, bits);
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  std::string name;

  void need(std::size_t n) const {
    if (left < n) throw ValidationError(name + ": truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return x;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return x;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

void put_blocks(std::string& out, const ParameterSet& params) {
  put_u32(out, static_cast<std::uint32_t>(params.blocks.size()));
  for (const auto& [name, t] : params.blocks) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape) put_u64(out, d);
    for (double v : t.v) put_f64(out, v);
  }
}

ParameterSet read_blocks(Reader& r) {
  ParameterSet params;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 4) throw ValidationError(r.name + ": block \"" + name + "\" has rank > 4");
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.u64();
    Tensor t(shape);
    for (std::size_t v = 0; v < t.size(); ++v) t[v] = r.f64();
    if (!params.blocks.emplace(name, std::move(t)).second)
      throw ValidationError(r.name + ": duplicate block \"" + name + "\"");
  }
  return params;
}

void check_against_config(const ParameterSet& params, const ModelConfig& cfg, const std::string& name) {
  const auto shapes = parameter_shapes(cfg);
  if (shapes.size() != params.blocks.size())
    throw ValidationError(strf("%s: %zu blocks stored, config implies %zu", name.c_str(),
                               params.blocks.size(), shapes.size()));
  for (const auto& [bname, shape] : shapes) {
    const Tensor& t = params.at(bname);
    if (t.shape != shape)
      throw ValidationError(name + ": block \"" + bname + "\" has a shape that contradicts the stored config");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  check_against_config(ckpt.params, ckpt.config, "checkpoint");
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);

  const std::string cfg_text = render_model_config(ckpt.config);
  put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  out += cfg_text;

  put_blocks(out, ckpt.params);

  out.push_back(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    put_u64(out, ckpt.optimizer->step);
    put_blocks(out, ckpt.optimizer->m);
    put_blocks(out, ckpt.optimizer->v);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write checkpoint: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ValidationError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r{b.data(), b.size(), path.string()};
  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw ValidationError(r.name + ": bad checkpoint magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw ValidationError(strf("%s: checkpoint version %u, expected %u", r.name.c_str(), version, kVersion));

  Checkpoint ckpt;
  const std::uint32_t cfg_len = r.u32();
  ckpt.config = parse_model_config_text(r.bytes(cfg_len), r.name + " (embedded config)");
  ckpt.params = read_blocks(r);
  check_against_config(ckpt.params, ckpt.config, r.name);

  r.need(1);
  const bool has_opt = *r.p != 0;
  r.p += 1;
  r.left -= 1;
  if (has_opt) {
    OptimizerState opt;
    opt.step = r.u64();
    opt.m = read_blocks(r);
    opt.v = read_blocks(r);
    check_against_config(opt.m, ckpt.config, r.name + " (adam m)");
    check_against_config(opt.v, ckpt.config, r.name + " (adam v)");
    ckpt.optimizer = std::move(opt);
  }
  if (r.left != 0) throw ValidationError(r.name + ": trailing bytes after checkpoint payload");

  std::string bad;
  if (!ckpt.params.all_finite(&bad))
    throw ValidationError(r.name + ": non-finite value in block \"" + bad + "\"");
  return ckpt;
}

}  // namespace imti
