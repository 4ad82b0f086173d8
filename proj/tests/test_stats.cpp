#include <cmath>
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "imti/common.hpp"
#include "imti/embedding.hpp"
#include "imti/rng.hpp"
#include "imti/stats.hpp"

using namespace imti;

namespace {

// Direct softmax entropy in long double: H = -sum p_i log p_i.
long double naive_entropy(const std::vector<double>& e) {
  long double mx = e[0];
  for (double x : e) mx = std::max<long double>(mx, x);
  long double z = 0.0L;
  for (double x : e) z += expl(x - mx);
  long double h = 0.0L;
  for (double x : e) {
    const long double p = expl(x - mx) / z;
    h -= p * logl(p);
  }
  return h;
}

}  // namespace

TEST_CASE("frame stats match direct formulas on a hand fixture") {
  // mean 2.5, population variance ((1.5)^2+(0.5)^2+(0.5)^2+(1.5)^2)/4 = 1.25
  const std::vector<double> e = {1.0, 2.0, 3.0, 4.0};
  const FrameStats s = frame_stats(e);
  CHECK(s.mu == 2.5);
  CHECK(s.sigma == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));
  CHECK(std::fabs(s.entropy - static_cast<double>(naive_entropy(e))) < 1e-13);
}

TEST_CASE("frame stats agree with long double oracles on random vectors") {
  Rng rng(29);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + rng.below(63);
    std::vector<double> e(d);
    const double scale = trial % 3 == 0 ? 40.0 : 2.0;  // include strongly peaked softmaxes
    for (double& x : e) x = rng.uniform(-scale, scale);

    const FrameStats s = frame_stats(e);

    long double sum = 0.0L;
    for (double x : e) sum += x;
    const long double mu = sum / static_cast<long double>(d);
    long double sq = 0.0L;
    for (double x : e) sq += (x - mu) * (x - mu);
    const long double sigma = sqrtl(sq / static_cast<long double>(d));

    CHECK(std::fabs(s.mu - static_cast<double>(mu)) < 1e-12 * std::max(1.0, std::fabs(static_cast<double>(mu))));
    CHECK(std::fabs(s.sigma - static_cast<double>(sigma)) < 1e-12 * std::max(1.0, static_cast<double>(sigma)));
    CHECK(std::fabs(s.entropy - static_cast<double>(naive_entropy(e))) < 1e-12);
  }
}

TEST_CASE("entropy stays in range over a large random sweep") {
  Rng rng(31);
  const std::size_t d = 16;
  const double h_max = std::log(static_cast<double>(d));
  std::vector<double> e(d);
  for (int trial = 0; trial < 200000; ++trial) {
    for (double& x : e) x = rng.uniform(-300.0, 300.0);
    const FrameStats s = frame_stats(e);
    CHECK(s.entropy >= 0.0);
    CHECK(s.entropy <= h_max);
  }
}

TEST_CASE("uniform logits reach the entropy ceiling exactly") {
  for (std::size_t d : {2ul, 5ul, 64ul, 1024ul}) {
    const std::vector<double> e(d, 0.7);
    const FrameStats s = frame_stats(e);
    CHECK(std::fabs(s.entropy - std::log(static_cast<double>(d))) < 1e-12);
    CHECK(s.sigma < 1e-12);
    CHECK(std::fabs(s.mu - 0.7) < 1e-12);
  }
}

TEST_CASE("entropy is invariant to a constant logit shift") {
  Rng rng(37);
  std::vector<double> e(24);
  for (double& x : e) x = rng.uniform(-3.0, 3.0);
  const double base = frame_stats(e).entropy;
  for (double shift : {-100.0, -1.0, 0.5, 50.0}) {
    std::vector<double> shifted = e;
    for (double& x : shifted) x += shift;
    CHECK(std::fabs(frame_stats(shifted).entropy - base) < 1e-12);
  }
}

TEST_CASE("one dominant logit drives entropy to zero") {
  std::vector<double> e(8, 0.0);
  e[3] = 200.0;
  const FrameStats s = frame_stats(e);
  CHECK(s.entropy >= 0.0);
  CHECK(s.entropy < 1e-80);
}

TEST_CASE("frame stats reject vectors that cannot carry a spread") {
  CHECK_THROWS_AS(frame_stats(std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(frame_stats(std::vector<double>{}), ValidationError);
}

TEST_CASE("sequence augmentation appends the three statistics per frame") {
  Rng rng(41);
  EmbeddingSequence e;
  e.frames = Matrix(6, 5);
  for (std::size_t i = 0; i < e.frames.size(); ++i) e.frames.data()[i] = rng.uniform(-2.0, 2.0);

  const AugmentedFeatureSequence a = augment_sequence(e);
  CHECK(a.embedding_dim == 5);
  REQUIRE(a.frames.rows() == 6);
  REQUIRE(a.frames.cols() == 8);
  for (std::size_t t = 0; t < 6; ++t) {
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.frames(t, i) == e.frames(t, i));
    const FrameStats s = frame_stats(e.frames.row(t), 5);
    CHECK(a.frames(t, 5) == s.mu);
    CHECK(a.frames(t, 6) == s.sigma);
    CHECK(a.frames(t, 7) == s.entropy);
  }
}

TEST_CASE("sequence augmentation validates its input") {
  EmbeddingSequence e;
  e.frames = Matrix(3, 1);
  CHECK_THROWS_AS(augment_sequence(e), ValidationError);
  e.frames = Matrix(0, 4);
  CHECK_THROWS_AS(augment_sequence(e), ValidationError);
}