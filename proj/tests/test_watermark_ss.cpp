#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "wmlab/corpus.hpp"
#include "wmlab/dct.hpp"
#include "wmlab/distortions.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/rng.hpp"
#include "wmlab/watermark_ss.hpp"

using namespace wmlab;

namespace {

const Corpus& corpus50() {
  static const Corpus c = make_synthetic_corpus(50, 32, 1, 42);
  return c;
}

SpreadSpectrumCodec default_codec() {
  return SpreadSpectrumCodec(16, WatermarkKey{7}, SpreadSpectrumConfig{});
}

}  // namespace

TEST_CASE("capacity validation") {
  SpreadSpectrumConfig cfg;
  cfg.chips_per_bit = 64;  // 16 x 64 = 1024 > 210-coefficient band
  CHECK_THROWS_AS(SpreadSpectrumCodec(16, WatermarkKey{1}, cfg), CapacityError);

  // Automatic choice fills the band: floor(210/16) = 13.
  const SpreadSpectrumCodec codec = default_codec();
  CHECK(codec.band_size() == 210);
  CHECK(codec.chips_per_bit() == 13);

  // 56 bits leave 3 chips each.
  SpreadSpectrumConfig auto_cfg;
  CHECK(SpreadSpectrumCodec(56, WatermarkKey{1}, auto_cfg).chips_per_bit() == 3);
}

TEST_CASE("chip sets are disjoint and inside the band") {
  const SpreadSpectrumCodec codec = default_codec();
  std::set<std::pair<int, int>> seen;
  for (int bit = 0; bit < 16; ++bit) {
    for (const auto& [u, v] : codec.chip_coords(bit)) {
      CHECK(u + v >= 6);
      CHECK(u + v <= 20);
      CHECK(seen.insert({u, v}).second);  // disjointness
    }
  }
  CHECK(static_cast<int>(seen.size()) == 16 * 13);
}

TEST_CASE("same key gives identical patterns, different keys differ") {
  const Payload m = Payload::random(16, 5);
  SpreadSpectrumCodec a(16, WatermarkKey{9}, SpreadSpectrumConfig{});
  SpreadSpectrumCodec b(16, WatermarkKey{9}, SpreadSpectrumConfig{});
  SpreadSpectrumCodec c(16, WatermarkKey{10}, SpreadSpectrumConfig{});
  CHECK(a.residual(m, 32).data == b.residual(m, 32).data);
  CHECK(a.residual(m, 32).data != c.residual(m, 32).data);
}

TEST_CASE("no-attack round trip decodes exactly with confident margins") {
  const SpreadSpectrumCodec codec = default_codec();
  for (int i = 0; i < corpus50().size(); ++i) {
    const Payload m = Payload::random(16, 1000 + i);
    const ImageGrid wm = codec.embed(corpus50().images[i], m);
    std::vector<double> conf;
    const Payload decoded = codec.decode(wm, &conf);
    REQUIRE(decoded == m);
    for (const double c : conf) CHECK(c >= 0.5);
  }
}

TEST_CASE("imperceptibility at default alpha") {
  const SpreadSpectrumCodec codec = default_codec();
  double mean_psnr = 0.0, mean_ssim = 0.0;
  for (int i = 0; i < corpus50().size(); ++i) {
    const Payload m = Payload::random(16, 2000 + i);
    const ImageGrid wm = codec.embed(corpus50().images[i], m);
    mean_psnr += psnr(corpus50().images[i], wm);
    mean_ssim += ssim(corpus50().images[i], wm);
  }
  mean_psnr /= corpus50().size();
  mean_ssim /= corpus50().size();
  CHECK(mean_psnr >= 40.0);
  CHECK(mean_ssim >= 0.98);
}

TEST_CASE("zero strength embeds nothing and decodes with zero confidence") {
  SpreadSpectrumConfig cfg;
  cfg.strength_alpha = 0.0;
  const SpreadSpectrumCodec codec(16, WatermarkKey{3}, cfg);
  const ImageGrid& img = corpus50().images[0];
  const ImageGrid wm = codec.embed(img, Payload::random(16, 1));
  CHECK(wm.data == img.data);
  std::vector<double> conf;
  codec.decode(wm, &conf);
  for (const double c : conf) CHECK(c == 0.0);
}

TEST_CASE("wrong key decodes at chance level") {
  // Monte-Carlo over 100 wrong keys; binomial two-sided test at the 1% level.
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 77);
  long correct = 0, total = 0;
  for (int k = 0; k < 100; ++k) {
    const SpreadSpectrumCodec wrong(16, WatermarkKey{100000 + k},
                                    SpreadSpectrumConfig{});
    const ImageGrid wm = codec.embed(corpus50().images[k % corpus50().size()], m);
    const Payload decoded = wrong.decode(wm);
    for (int b = 0; b < 16; ++b) {
      correct += decoded.bits[b] == m.bits[b];
      ++total;
    }
  }
  const double acc = static_cast<double>(correct) / total;
  const double bound = 2.5758 * std::sqrt(0.25 / total);  // z at the 1% level
  CHECK(std::abs(acc - 0.5) <= bound);
}

TEST_CASE("embedding is linear: flipped payload negates the residual exactly") {
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 8);
  const ImageGrid r1 = codec.residual(m, 32);
  const ImageGrid r2 = codec.residual(m.complemented(), 32);
  for (std::size_t i = 0; i < r1.data.size(); ++i)
    CHECK(r1.data[i] == doctest::Approx(-r2.data[i]).epsilon(1e-12));
}

TEST_CASE("flipping one bit changes only that bit's chip subspace") {
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 9);
  Payload flipped = m;
  flipped.bits[5] ^= 1;
  const ImageGrid d(32, 32, 1);
  ImageGrid diff(32, 32, 1);
  const ImageGrid r1 = codec.residual(m, 32);
  const ImageGrid r2 = codec.residual(flipped, 32);
  for (std::size_t i = 0; i < diff.data.size(); ++i)
    diff.data[i] = r1.data[i] - r2.data[i];
  const auto coeffs = DctPlan::cached(32).forward_2d(diff.data);
  const auto chips = codec.chip_coords(5);
  const std::set<std::pair<int, int>> chip_set(chips.begin(), chips.end());
  for (int u = 0; u < 32; ++u)
    for (int v = 0; v < 32; ++v) {
      if (chip_set.count({u, v}))
        CHECK(std::abs(coeffs[u * 32 + v]) > 1e-6);
      else
        CHECK(std::abs(coeffs[u * 32 + v]) < 1e-10);
    }
}

TEST_CASE("decoding a constant gray image gives zero confidences") {
  const SpreadSpectrumCodec codec = default_codec();
  std::vector<double> conf;
  codec.decode(ImageGrid(32, 32, 1, 0.5), &conf);
  for (const double c : conf) CHECK(c == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("decoder gradient matches central finite differences") {
  const SpreadSpectrumCodec codec = default_codec();
  const ImageGrid& img = corpus50().images[3];
  const Payload target = Payload::random(16, 22);
  const ImageGrid grad = codec.loss_gradient(img, target);

  const auto loss = [&](const ImageGrid& x) {
    const auto z = codec.correlations(x);
    double l = 0.0;
    for (int i = 0; i < 16; ++i) {
      const double zt = codec.nominal_correlation(target.bits[i]);
      l += (z[i] - zt) * (z[i] - zt);
    }
    return l;
  };

  Rng rng(5);
  const double h = 1e-6;
  for (int k = 0; k < 20; ++k) {
    const int y = static_cast<int>(rng.uniform_index(32));
    const int x = static_cast<int>(rng.uniform_index(32));
    ImageGrid plus = img, minus = img;
    plus.at(y, x) += h;
    minus.at(y, x) -= h;
    const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    if (std::abs(fd) < 1e-9) {
      CHECK(std::abs(grad.at(y, x)) < 1e-7);
    } else {
      CHECK(grad.at(y, x) ==
            doctest::Approx(fd).epsilon(1e-4));  // rel error <= 1e-4
    }
  }
}

TEST_CASE("gradient vanishes exactly at the quadratic minimum") {
  // A host with zero band energy plus the nominal pattern puts every
  // correlation exactly at its target value.
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 30);
  ImageGrid img(32, 32, 1, 0.5);
  const ImageGrid pattern = codec.residual(m, 32);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] += pattern.data[i];
  const ImageGrid grad = codec.loss_gradient(img, m);
  for (const double g : grad.data) CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("single-bit loss gradient lies in that bit's chip span") {
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 31);
  ImageGrid img(32, 32, 1, 0.5);
  const ImageGrid pattern = codec.residual(m, 32);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] += pattern.data[i];

  Payload target = m;
  target.bits[11] ^= 1;  // only bit 11 contributes to the loss
  const ImageGrid grad = codec.loss_gradient(img, target);
  const auto coeffs = DctPlan::cached(32).forward_2d(grad.data);
  const auto chips = codec.chip_coords(11);
  const std::set<std::pair<int, int>> chip_set(chips.begin(), chips.end());
  double on_chips = 0.0, off_chips = 0.0;
  for (int u = 0; u < 32; ++u)
    for (int v = 0; v < 32; ++v) {
      const double p = coeffs[u * 32 + v] * coeffs[u * 32 + v];
      if (chip_set.count({u, v})) on_chips += p;
      else off_chips += p;
    }
  CHECK(on_chips > 0.0);
  CHECK(off_chips < 1e-18 * on_chips);
}

TEST_CASE("robustness floor after JPEG-like quality 50") {
  const SpreadSpectrumCodec codec = default_codec();
  double acc = 0.0;
  for (int i = 0; i < corpus50().size(); ++i) {
    const Payload m = Payload::random(16, 3000 + i);
    const ImageGrid wm = codec.embed(corpus50().images[i], m);
    acc += bit_metrics(m, codec.decode(jpeg_like(wm, 50))).bit_accuracy;
  }
  CHECK(acc / corpus50().size() >= 0.90);
}

TEST_CASE("calibration hits the target corpus-mean PSNR") {
  Corpus sample;
  for (int i = 0; i < 12; ++i) sample.images.push_back(corpus50().images[i]);
  sample.train_indices.resize(12);
  const double alpha = calibrate_ss_alpha(sample, 16, WatermarkKey{7},
                                          SpreadSpectrumConfig{}, 42.25, 99);
  SpreadSpectrumConfig cfg;
  cfg.strength_alpha = alpha;
  const SpreadSpectrumCodec codec(16, WatermarkKey{7}, cfg);
  double mean = 0.0;
  for (int i = 0; i < 12; ++i) {
    const Payload m = Payload::random(16, derive_seed(99, "ss-calib", i));
    mean += psnr(sample.images[i], codec.embed(sample.images[i], m));
  }
  CHECK(mean / 12 == doctest::Approx(42.25).epsilon(0.002));
}

TEST_CASE("amplitude in normalized model space") {
  const SpreadSpectrumCodec codec = default_codec();
  CHECK(codec.amplitude_normalized() ==
        doctest::Approx(2.0 * codec.config().strength_alpha *
                        std::sqrt(codec.chips_per_bit())));
}

TEST_CASE("residual power concentrates in the configured mid-band annulus") {
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 60);
  const ImageGrid& img = corpus50().images[7];
  const ImageGrid wm = codec.embed(img, m);
  const std::vector<double> power = compute_residual_spectrum(wm, img);
  // DCT rings 6..20 correspond to DFT radii about 2..10.
  double in_band = 0.0, total = 0.0;
  for (std::size_t r = 0; r < power.size(); ++r) {
    // counts per annulus differ; weight by the ring population implicitly
    // via the raw power sums recomputed here
    const double p = power[r];
    total += p;
    if (r >= 2 && r <= 10) in_band += p;
  }
  CHECK(in_band / total >= 0.90);
}

TEST_CASE("size validation") {
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 1);
  CHECK_THROWS_AS(codec.embed(ImageGrid(32, 16, 1, 0.5), m),
                  std::invalid_argument);
  CHECK_THROWS_AS(codec.embed(ImageGrid(16, 16, 1, 0.5), m),
                  std::invalid_argument);
  CHECK_THROWS_AS(codec.embed(corpus50().images[0], Payload::random(8, 1)),
                  std::invalid_argument);
}

TEST_CASE("RGB embedding touches luminance only") {
  const Corpus rgb = make_synthetic_corpus(1, 32, 3, 8);
  const SpreadSpectrumCodec codec = default_codec();
  const Payload m = Payload::random(16, 2);
  const ImageGrid wm = codec.embed(rgb.images[0], m);
  CHECK(codec.decode(wm) == m);
  // Chroma differences (R-G, B-G) are preserved where no clamping happened.
  int checked = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      bool interior = true;
      for (int c = 0; c < 3; ++c)
        if (wm.at(y, x, c) <= 0.0 || wm.at(y, x, c) >= 1.0) interior = false;
      if (!interior) continue;
      ++checked;
      const double dr = rgb.images[0].at(y, x, 0) - rgb.images[0].at(y, x, 1);
      const double dr2 = wm.at(y, x, 0) - wm.at(y, x, 1);
      CHECK(dr == doctest::Approx(dr2).epsilon(1e-9));
    }
  CHECK(checked > 500);
}
