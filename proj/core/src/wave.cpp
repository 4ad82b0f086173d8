#include "imti/wave.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "imti/common.hpp"

namespace imti {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& s, std::uint32_t x) {
  s.push_back(static_cast<char>(x & 0xff));
  s.push_back(static_cast<char>(x >> 8 & 0xff));
  s.push_back(static_cast<char>(x >> 16 & 0xff));
  s.push_back(static_cast<char>(x >> 24 & 0xff));
}

void put_u16(std::string& s, std::uint16_t x) {
  s.push_back(static_cast<char>(x & 0xff));
  s.push_back(static_cast<char>(x >> 8 & 0xff));
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace

void Waveform::validate() const {
  if (samples.empty()) throw ValidationError("waveform is empty");
  if (sample_rate != kSampleRate)
    throw ValidationError(strf("waveform sample rate %u, expected %u", sample_rate, kSampleRate));
  for (double s : samples)
    if (!std::isfinite(s)) throw ValidationError("waveform contains a non-finite sample");
}

Waveform load_wav(const std::filesystem::path& path) {
  const std::vector<unsigned char> b = read_file(path);
  const std::string name = path.string();
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
    throw ValidationError(name + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const char* id = reinterpret_cast<const char*>(b.data() + pos);
    const std::uint32_t len = read_u32(b.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > b.size()) throw ValidationError(name + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw ValidationError(name + ": fmt chunk too short");
      const std::uint16_t format = read_u16(b.data() + body);
      const std::uint16_t channels = read_u16(b.data() + body + 2);
      const std::uint32_t rate = read_u32(b.data() + body + 4);
      const std::uint16_t bits = read_u16(b.data() + body + 14);
      if (format != 1) throw ValidationError(strf("%s: format %u, only PCM (1) accepted", name.c_str(), format));
      if (channels != 1) throw ValidationError(strf("%s: %u channels, only mono accepted", name.c_str(), channels));
      if (rate != kSampleRate) throw ValidationError(strf("%s: %u Hz, only %u accepted", name.c_str(), rate, kSampleRate));
      if (bits != 16) throw ValidationError(strf("%s: %u bits per sample, only 16 accepted", name.c_str(), bits));
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt) throw ValidationError(name + ": missing fmt chunk");
  if (data_off == 0) throw ValidationError(name + ": missing data chunk");
  if (data_len % 2 != 0) throw ValidationError(name + ": odd data chunk length");

  Waveform w;
  w.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const std::int16_t s = static_cast<std::int16_t>(read_u16(b.data() + data_off + 2 * i));
    w.samples[i] = static_cast<double>(s) / 32768.0;
  }
  w.validate();
  return w;
}

void save_wav(const std::filesystem::path& path, const Waveform& w) {
  w.validate();
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);                    // PCM
  put_u16(out, 1);                    // mono
  put_u32(out, w.sample_rate);
  put_u32(out, w.sample_rate * 2);    // byte rate
  put_u16(out, 2);                    // block align
  put_u16(out, 16);                   // bits per sample
  out += "data";
  put_u32(out, data_len);
  for (double s : w.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const long q = std::lround(clipped * 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ValidationError("write failed: " + path.string());
}

}  // namespace imti
