#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <doctest.h>
#include "imti/common.hpp"
#include "imti/embedding.hpp"
#include "imti/manifest.hpp"
#include "imti/rng.hpp"
#include "imti/synth.hpp"
#include "imti/wave.hpp"
#include "test_util.hpp"

using namespace imti;
using testutil::TempDir;

namespace {

std::vector<std::uint8_t> emb1_bytes(std::uint32_t version, std::uint32_t t, std::uint32_t d,
                                     const std::vector<float>& payload, const char* magic = "EMB1") {
  std::vector<std::uint8_t> v(magic, magic + 4);
  testutil::push_u32(v, version);
  testutil::push_u32(v, t);
  testutil::push_u32(v, d);
  for (float x : payload) testutil::push_f32(v, x);
  return v;
}

}  // namespace

TEST_CASE("embedding file round-trips float32 payloads exactly") {
  TempDir dir("emb-roundtrip");
  Rng rng(11);
  Matrix m(7, 5);
  // float32 payload: store values that survive the narrowing untouched
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = static_cast<float>(rng.normal());

  save_embedding(dir / "a.emb", m);
  EmbeddingSequence e = load_embedding(dir / "a.emb");
  REQUIRE(e.frame_count() == 7);
  REQUIRE(e.dim() == 5);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) CHECK(e.frames(r, c) == m(r, c));
}

TEST_CASE("embedding payload is frame-major") {
  TempDir dir("emb-layout");
  testutil::write_bytes(dir / "a.emb", emb1_bytes(1, 2, 3, {1, 2, 3, 4, 5, 6}));
  EmbeddingSequence e = load_embedding(dir / "a.emb");
  CHECK(e.frames(0, 0) == 1.0);
  CHECK(e.frames(0, 2) == 3.0);
  CHECK(e.frames(1, 0) == 4.0);
  CHECK(e.frames(1, 2) == 6.0);
}

TEST_CASE("embedding loader rejects malformed files") {
  TempDir dir("emb-bad");

  testutil::write_bytes(dir / "magic.emb", emb1_bytes(1, 1, 2, {1, 2}, "EMBX"));
  CHECK_THROWS_AS(load_embedding(dir / "magic.emb"), ValidationError);

  testutil::write_bytes(dir / "version.emb", emb1_bytes(2, 1, 2, {1, 2}));
  CHECK_THROWS_AS(load_embedding(dir / "version.emb"), ValidationError);

  auto truncated = emb1_bytes(1, 2, 2, {1, 2, 3});
  testutil::write_bytes(dir / "short.emb", truncated);
  CHECK_THROWS_AS(load_embedding(dir / "short.emb"), ValidationError);

  auto trailing = emb1_bytes(1, 1, 2, {1, 2, 3});
  testutil::write_bytes(dir / "long.emb", trailing);
  CHECK_THROWS_AS(load_embedding(dir / "long.emb"), ValidationError);

  // the error pinpoints the offending frame and dimension
  testutil::write_bytes(dir / "nan.emb", emb1_bytes(1, 2, 3, {1, NAN, 3, 4, 5, 6}));
  try {
    load_embedding(dir / "nan.emb");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("frame 0") != std::string::npos);
    CHECK(msg.find("dim 1") != std::string::npos);
  }
}

TEST_CASE("wav round-trip is exact at 16-bit resolution") {
  TempDir dir("wav-roundtrip");
  Waveform w;
  Rng rng(3);
  for (int i = 0; i < 400; ++i) w.samples.push_back(rng.uniform(-0.99, 0.99));

  save_wav(dir / "a.wav", w);
  Waveform r = load_wav(dir / "a.wav");
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == kSampleRate);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    // writer rounds to the nearest 1/32767 step, reader divides by 32768
    const double expect = std::lround(w.samples[i] * 32767.0) / 32768.0;
    CHECK(r.samples[i] == expect);
    // |q - 32768 s| <= |q - 32767 s| + |s| <= 0.5 + 1
    CHECK(std::fabs(r.samples[i] - w.samples[i]) <= 1.5 / 32768.0);
  }
}

TEST_CASE("wav loader rejects everything but 16-bit mono pcm at 16 kHz") {
  TempDir dir("wav-bad");
  Waveform w;
  w.samples.assign(64, 0.25);
  save_wav(dir / "good.wav", w);
  auto bytes = testutil::read_bytes(dir / "good.wav");

  auto patch16 = [&](std::size_t off, std::uint16_t val) {
    auto b = bytes;
    b[off] = static_cast<std::uint8_t>(val & 0xff);
    b[off + 1] = static_cast<std::uint8_t>(val >> 8);
    return b;
  };
  // canonical 44-byte header: channels at 22, sample rate at 24, bits at 34
  testutil::write_bytes(dir / "stereo.wav", patch16(22, 2));
  CHECK_THROWS_AS(load_wav(dir / "stereo.wav"), ValidationError);
  testutil::write_bytes(dir / "rate.wav", patch16(24, 8000));
  CHECK_THROWS_AS(load_wav(dir / "rate.wav"), ValidationError);
  testutil::write_bytes(dir / "bits.wav", patch16(34, 8));
  CHECK_THROWS_AS(load_wav(dir / "bits.wav"), ValidationError);
  testutil::write_bytes(dir / "fmt.wav", patch16(20, 3));
  CHECK_THROWS_AS(load_wav(dir / "fmt.wav"), ValidationError);

  auto chopped = bytes;
  chopped.resize(chopped.size() - 10);
  testutil::write_bytes(dir / "chopped.wav", chopped);
  CHECK_THROWS_AS(load_wav(dir / "chopped.wav"), ValidationError);
}

TEST_CASE("wav writer clips out-of-range samples") {
  TempDir dir("wav-clip");
  Waveform w;
  w.samples = {1.5, -2.0, 0.0};
  save_wav(dir / "c.wav", w);
  Waveform r = load_wav(dir / "c.wav");
  CHECK(r.samples[0] == 32767.0 / 32768.0);
  CHECK(r.samples[1] == -32767.0 / 32768.0);
  CHECK(r.samples[2] == 0.0);
}

TEST_CASE("manifest round-trips entries with paths resolved") {
  TempDir dir("man-roundtrip");
  std::vector<ManifestEntry> entries(2);
  entries[0].id = "utt0";
  entries[0].embedding_path = dir / "utt0.emb";
  entries[0].waveform_path = dir / "utt0.wav";
  entries[0].intelligibility = 0.75;
  entries[0].cer_whisper = 0.125;
  entries[0].cer_google = 1.25;  // raw rates may exceed 1
  entries[0].stoi = 0.5;
  entries[0].split = Split::train;
  entries[1].id = "utt1";
  entries[1].embedding_path = dir / "utt1.emb";
  entries[1].intelligibility = 0.0;
  entries[1].cer_whisper = 0.0;
  entries[1].cer_google = 0.0;
  entries[1].stoi = 1.0;
  entries[1].split = Split::test;

  save_manifest(dir / "m.jsonl", entries);
  auto loaded = load_manifest(dir / "m.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "utt0");
  CHECK(loaded[0].embedding_path == dir / "utt0.emb");
  CHECK(loaded[0].waveform_path.value() == dir / "utt0.wav");
  CHECK(loaded[0].cer_google == 1.25);
  CHECK(loaded[1].split == Split::test);
  CHECK(!loaded[1].waveform_path.has_value());
}

TEST_CASE("manifest loader rejects bad records with line positions") {
  TempDir dir("man-bad");
  const std::string good =
      R"({"id":"a","embedding":"a.emb","intelligibility":0.5,"cer_whisper":0.1,"cer_google":0.2,"stoi":0.9,"split":"train"})";

  testutil::write_text(dir / "dup.jsonl", good + "\n" + good + "\n");
  CHECK_THROWS_AS(load_manifest(dir / "dup.jsonl"), ValidationError);

  testutil::write_text(dir / "unknown.jsonl",
                       R"({"id":"a","embedding":"a.emb","intelligibility":0.5,"cer_whisper":0.1,)"
                       R"("cer_google":0.2,"stoi":0.9,"split":"train","extra":1})"
                       "\n");
  CHECK_THROWS_AS(load_manifest(dir / "unknown.jsonl"), ValidationError);

  testutil::write_text(dir / "range.jsonl",
                       R"({"id":"a","embedding":"a.emb","intelligibility":1.5,"cer_whisper":0.1,)"
                       R"("cer_google":0.2,"stoi":0.9,"split":"train"})"
                       "\n");
  CHECK_THROWS_AS(load_manifest(dir / "range.jsonl"), ValidationError);

  testutil::write_text(dir / "split.jsonl",
                       R"({"id":"a","embedding":"a.emb","intelligibility":0.5,"cer_whisper":0.1,)"
                       R"("cer_google":0.2,"stoi":0.9,"split":"dev"})"
                       "\n");
  CHECK_THROWS_AS(load_manifest(dir / "split.jsonl"), ValidationError);

  testutil::write_text(dir / "missing.jsonl", R"({"id":"a","embedding":"a.emb"})" "\n");
  CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl"), ValidationError);

  // second line is the broken one; the diagnostic must say so
  testutil::write_text(dir / "where.jsonl", good + "\nnot json\n");
  try {
    load_manifest(dir / "where.jsonl");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("manifest allows blank lines and resolves relative paths") {
  TempDir dir("man-rel");
  testutil::write_text(dir / "m.jsonl",
                       "\n"
                       R"({"id":"a","embedding":"sub/a.emb","waveform":"a.wav","intelligibility":0.5,)"
                       R"("cer_whisper":0.1,"cer_google":0.2,"stoi":0.9,"split":"val"})"
                       "\n\n");
  auto loaded = load_manifest(dir / "m.jsonl");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].embedding_path == dir / "sub/a.emb");
  CHECK(loaded[0].waveform_path.value() == dir / "a.wav");
}

TEST_CASE("cer inversion clips into the unit interval") {
  CHECK(invert_cer(0.0) == 1.0);
  CHECK(invert_cer(0.25) == 0.75);
  CHECK(invert_cer(1.0) == 0.0);
  CHECK(invert_cer(1.3) == 0.0);
  CHECK_THROWS_AS(invert_cer(-0.1), ValidationError);

  // monotone non-increasing and 1-Lipschitz across a grid
  double prev = invert_cer(0.0);
  for (int i = 1; i <= 300; ++i) {
    double x = i * 0.01;
    double y = invert_cer(x);
    CHECK(y <= prev);
    CHECK(prev - y <= 0.01 + 1e-15);
    CHECK(y >= 0.0);
    CHECK(y <= 1.0);
    prev = y;
  }
}

TEST_CASE("synthetic corpus is reproducible and seed-sensitive") {
  TempDir dir("synth");
  SynthConfig cfg;
  cfg.n_train = 2;
  cfg.n_val = 2;
  cfg.n_test = 2;
  cfg.embedding_dim = 4;
  cfg.t_min = 6;
  cfg.t_max = 8;
  cfg.seed = 5;
  StftConfig stft;
  stft.fft_size = 128;
  stft.hop = 64;

  synth_dataset(cfg, stft, dir / "a");
  synth_dataset(cfg, stft, dir / "b");
  CHECK(testutil::read_bytes(dir / "a/manifest.jsonl") == testutil::read_bytes(dir / "b/manifest.jsonl"));
  CHECK(testutil::read_bytes(dir / "a/utt0000.emb") == testutil::read_bytes(dir / "b/utt0000.emb"));
  CHECK(testutil::read_bytes(dir / "a/utt0005.wav") == testutil::read_bytes(dir / "b/utt0005.wav"));

  cfg.seed = 6;
  synth_dataset(cfg, stft, dir / "c");
  CHECK(testutil::read_bytes(dir / "a/manifest.jsonl") != testutil::read_bytes(dir / "c/manifest.jsonl"));

  auto entries = load_manifest(dir / "a/manifest.jsonl");
  REQUIRE(entries.size() == 6);
  int split_counts[3] = {0, 0, 0};
  for (const auto& e : entries) ++split_counts[static_cast<int>(e.split)];
  CHECK(split_counts[0] == 2);
  CHECK(split_counts[1] == 2);
  CHECK(split_counts[2] == 2);
}
