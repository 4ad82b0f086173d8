#include "imti/embedding.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "imti/common.hpp"

namespace imti {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = read_u32_le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void put_u32_le(std::string& s, std::uint32_t x) {
  s.push_back(static_cast<char>(x & 0xff));
  s.push_back(static_cast<char>(x >> 8 & 0xff));
  s.push_back(static_cast<char>(x >> 16 & 0xff));
  s.push_back(static_cast<char>(x >> 24 & 0xff));
}

}  // namespace

void EmbeddingSequence::validate() const {
  if (frames.rows() < 1) throw ValidationError("embedding has no frames");
  if (frames.cols() < 2)
    throw ValidationError(strf("embedding dimension %zu, need at least 2", frames.cols()));
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (!std::isfinite(frames.data()[i]))
      throw ValidationError(
          strf("embedding has a non-finite value at frame %zu dim %zu", i / frames.cols(), i % frames.cols()));
}

EmbeddingSequence load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  if (b.size() < 16 || std::memcmp(b.data(), kMagic, 4) != 0)
    throw ValidationError(name + ": bad embedding magic");
  const std::uint32_t version = read_u32_le(b.data() + 4);
  if (version != kVersion)
    throw ValidationError(strf("%s: embedding version %u, expected %u", name.c_str(), version, kVersion));
  const std::uint32_t t = read_u32_le(b.data() + 8);
  const std::uint32_t d = read_u32_le(b.data() + 12);
  const std::size_t expected = 16 + static_cast<std::size_t>(t) * d * 4;
  if (b.size() != expected)
    throw ValidationError(strf("%s: payload is %zu bytes, header implies %zu", name.c_str(), b.size(), expected));

  EmbeddingSequence e;
  e.frames = Matrix(t, d);
  const unsigned char* p = b.data() + 16;
  for (std::size_t i = 0; i < static_cast<std::size_t>(t) * d; ++i)
    e.frames.data()[i] = static_cast<double>(read_f32_le(p + 4 * i));
  e.validate();
  return e;
}

void save_embedding(const std::filesystem::path& path, const Matrix& frames) {
  EmbeddingSequence check{frames};
  check.validate();

  std::string out;
  out.reserve(16 + frames.size() * 4);
  out.append(kMagic, 4);
  put_u32_le(out, kVersion);
  put_u32_le(out, static_cast<std::uint32_t>(frames.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(frames.cols()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const float f = static_cast<float>(frames.data()[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32_le(out, bits);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ValidationError("write failed: " + path.string());
}

}  // namespace imti
