#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "wmlab/corpus.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/rng.hpp"

using namespace wmlab;

namespace {

ImageGrid random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageGrid img(h, w, 1);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("bit_metrics counts matches") {
  const Payload a = Payload::from_hex("a5f0", 16);
  SUBCASE("identical") {
    const DecodeMetrics m = bit_metrics(a, a);
    CHECK(m.bit_accuracy == 1.0);
    CHECK(m.ber == 0.0);
    CHECK(m.payload_success);
  }
  SUBCASE("complemented") {
    const DecodeMetrics m = bit_metrics(a, a.complemented());
    CHECK(m.bit_accuracy == 0.0);
    CHECK(m.ber == 1.0);
    CHECK_FALSE(m.payload_success);
  }
  SUBCASE("4 of 16 differ") {
    Payload b = a;
    for (int i : {1, 5, 9, 13}) b.bits[i] ^= 1;
    const DecodeMetrics m = bit_metrics(a, b);
    CHECK(m.bit_accuracy == doctest::Approx(0.75));
    CHECK(m.ber == doctest::Approx(0.25));
    CHECK_FALSE(m.payload_success);
    CHECK(m.bit_accuracy + m.ber == 1.0);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(bit_metrics(a, Payload::zeros(8)), std::invalid_argument);
  }
}

TEST_CASE("bit_metrics is permutation-equivariant") {
  Rng rng(3);
  Payload a = Payload::random(16, 1), b = Payload::random(16, 2);
  const DecodeMetrics before = bit_metrics(a, b);
  std::vector<int> perm(16);
  for (int i = 0; i < 16; ++i) perm[i] = i;
  rng.shuffle(perm);
  Payload pa = a, pb = b;
  for (int i = 0; i < 16; ++i) {
    pa.bits[i] = a.bits[perm[i]];
    pb.bits[i] = b.bits[perm[i]];
  }
  const DecodeMetrics after = bit_metrics(pa, pb);
  CHECK(before.bit_accuracy == after.bit_accuracy);
  CHECK(before.payload_success == after.payload_success);
}

TEST_CASE("psnr of identical images is the +inf sentinel") {
  const ImageGrid a = random_image(16, 16, 1);
  CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("psnr of a 0.1 uniform offset is exactly 20 dB") {
  const ImageGrid a = random_image(32, 32, 2);
  ImageGrid b = a;
  for (double& v : b.data) v += 0.1;  // deliberately unclamped
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr of one flipped pixel is 10 log10(N)") {
  ImageGrid a(32, 32, 1, 0.0);
  ImageGrid b = a;
  b.at(5, 7) = 1.0;
  const double n = 32.0 * 32.0;
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(n)).epsilon(1e-12));
}

TEST_CASE("psnr/ssim argument symmetry and shape checks") {
  const ImageGrid a = random_image(16, 16, 3);
  const ImageGrid b = random_image(16, 16, 4);
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK_THROWS_AS(psnr(a, random_image(8, 16, 5)), std::invalid_argument);
  CHECK_THROWS_AS(ssim(a, random_image(8, 16, 5)), std::invalid_argument);
}

TEST_CASE("ssim of identical images is 1") {
  const ImageGrid a = random_image(16, 16, 6);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim rejects images below the window size") {
  const ImageGrid tiny = random_image(10, 10, 7);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("inverted structure scores near zero") {
  // Mid-gray plus texture against its negative: structure term flips sign.
  const Corpus c = make_synthetic_corpus(1, 32, 1, 99);
  const ImageGrid a = c.images[0];
  ImageGrid b = a;
  for (double& v : b.data) v = 1.0 - v;
  CHECK(ssim(a, b) < 0.1);
}

TEST_CASE("ssim under sigma-10 noise sits in (0.5, 1.0)") {
  const Corpus c = make_synthetic_corpus(1, 32, 1, 98);
  Rng rng(55);
  ImageGrid b = c.images[0];
  for (double& v : b.data)
    v = std::clamp(v + (10.0 / 255.0) * rng.gaussian(), 0.0, 1.0);
  const double s = ssim(c.images[0], b);
  CHECK(s > 0.5);
  CHECK(s < 1.0);
}

TEST_CASE("ssim decreases with constant luminance offset") {
  const Corpus corpus = make_synthetic_corpus(1, 32, 1, 97);
  const ImageGrid& a = corpus.images[0];
  double prev = 1.0;
  for (const double offset : {0.02, 0.05, 0.1}) {
    ImageGrid b = a;
    for (double& v : b.data) v += offset;  // unclamped on purpose
    const double s = ssim(a, b);
    CHECK(s < prev);
    CHECK(s < 1.0);
    prev = s;
  }
}

TEST_CASE("payload hex rendering round trips") {
  const Payload p = Payload::random(16, 42);
  CHECK(Payload::from_hex(p.to_hex(), 16) == p);
  CHECK(Payload::zeros(16).to_hex() == "0000");
  Payload ones = Payload::zeros(16).complemented();
  CHECK(ones.to_hex() == "ffff");
  CHECK_THROWS_AS(Payload::from_hex("zz", 8), std::invalid_argument);
}
