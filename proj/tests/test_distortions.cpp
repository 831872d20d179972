#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wmlab/corpus.hpp"
#include "wmlab/distortions.hpp"
#include "wmlab/image.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/rng.hpp"

using namespace wmlab;

namespace {

double max_abs_diff(const ImageGrid& a, const ImageGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

const Corpus& test_corpus() {
  static const Corpus c = make_synthetic_corpus(6, 32, 1, 1234);
  return c;
}

}  // namespace

TEST_CASE("jpeg_like at quality 100 changes pixels by at most 0.01") {
  for (const auto& img : test_corpus().images)
    CHECK(max_abs_diff(img, jpeg_like(img, 100)) <= 0.01);
}

TEST_CASE("jpeg_like leaves a constant image within one DC quantum") {
  for (const int quality : {100, 50, 20}) {
    const ImageGrid gray(32, 32, 1, 0.43);
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    const double q_dc = std::clamp<double>(
        std::lround(jpeg_quant_table(0, 0) * scale / 100.0), 1.0, 255.0);
    CHECK(max_abs_diff(gray, jpeg_like(gray, quality)) <= q_dc / 255.0);
  }
}

TEST_CASE("jpeg_like validates quality and pads non-multiple-of-8 sizes") {
  const ImageGrid img(20, 20, 1, 0.5);
  CHECK_THROWS_AS(jpeg_like(img, 0), std::invalid_argument);
  CHECK_THROWS_AS(jpeg_like(img, 101), std::invalid_argument);
  const ImageGrid out = jpeg_like(img, 50);  // reflect-pad path
  CHECK(out.height == 20);
  CHECK(out.width == 20);
}

TEST_CASE("jpeg_like on RGB leaves chroma differences zero-mean") {
  const Corpus rgb = make_synthetic_corpus(1, 32, 3, 4);
  const ImageGrid out = jpeg_like(rgb.images[0], 50);
  CHECK(out.channels == 3);
  CHECK(image_is_valid(out));
}

TEST_CASE("gaussian_noise: identity at sigma 0, seeded determinism") {
  const ImageGrid& img = test_corpus().images[0];
  CHECK(gaussian_noise(img, 0.0, 7).data == img.data);
  CHECK(gaussian_noise(img, 10.0, 7).data == gaussian_noise(img, 10.0, 7).data);
  CHECK(gaussian_noise(img, 10.0, 7).data != gaussian_noise(img, 10.0, 8).data);
  CHECK_THROWS_AS(gaussian_noise(img, -1.0, 7), std::invalid_argument);
}

TEST_CASE("gaussian_noise sigma-10 empirical std within 2% on mid-gray") {
  const ImageGrid gray(128, 128, 1, 0.5);  // plenty of samples, no clamping
  const ImageGrid noisy = gaussian_noise(gray, 10.0, 99);
  double mean = 0.0;
  for (std::size_t i = 0; i < noisy.data.size(); ++i)
    mean += noisy.data[i] - 0.5;
  mean /= static_cast<double>(noisy.size());
  double var = 0.0;
  for (std::size_t i = 0; i < noisy.data.size(); ++i) {
    const double d = noisy.data[i] - 0.5 - mean;
    var += d * d;
  }
  var /= static_cast<double>(noisy.size() - 1);
  const double target = 10.0 / 255.0;
  CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(0.02));
}

TEST_CASE("crop_border width enumeration matches the spec examples") {
  CHECK(crop_border_width(32, 32, 0.10) == 1);  // removes 12.1%
  CHECK(crop_border_width(32, 32, 0.0) == 0);
  CHECK(crop_border_width(32, 32, 0.125) == 2);
  const ImageGrid& img = test_corpus().images[1];
  CHECK(crop_border(img, 0.0).data == img.data);
  const ImageGrid cropped = crop_border(img, 0.10);
  CHECK(cropped.at(0, 0) == 0.5);
  CHECK(cropped.at(31, 31) == 0.5);
  CHECK(cropped.at(0, 16) == 0.5);
  CHECK(cropped.at(16, 16) == img.at(16, 16));
  CHECK_THROWS_AS(crop_border(img, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(crop_border(img, -0.1), std::invalid_argument);
  // A fraction that would need w >= min(H,W)/2 on a tiny image.
  CHECK_THROWS_AS(crop_border(ImageGrid(8, 8, 1, 0.5), 0.49),
                  std::invalid_argument);
}

TEST_CASE("affine: identity parameters reproduce the input") {
  const ImageGrid& img = test_corpus().images[2];
  CHECK(max_abs_diff(img, affine(img, 0.0, 1.0)) <= 1e-6);
}

TEST_CASE("affine: rotate there and back costs only resampling") {
  const ImageGrid& img = test_corpus().images[3];
  const ImageGrid once = affine(img, 3.0, 1.0);
  const ImageGrid back = affine(once, -3.0, 1.0);
  // Compare on the interior; the border picks up fill. psnr >= 30 dB per
  // the operation contract.
  CHECK(psnr(img, back) >= 30.0);
}

TEST_CASE("affine validates parameter ranges") {
  const ImageGrid& img = test_corpus().images[0];
  CHECK_THROWS_AS(affine(img, 6.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(affine(img, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(affine(img, 0.0, 1.2), std::invalid_argument);
}

TEST_CASE("blur preserves mean intensity exactly") {
  const ImageGrid& img = test_corpus().images[4];
  for (const double sigma : {0.5, 1.0, 2.5}) {
    const ImageGrid out = blur(img, sigma);
    CHECK(mean_intensity(out) ==
          doctest::Approx(mean_intensity(img)).epsilon(1e-12));
  }
}

TEST_CASE("blur with tiny sigma is near-identity") {
  const ImageGrid& img = test_corpus().images[5];
  CHECK(max_abs_diff(img, blur(img, 0.05)) <= 0.01);
  CHECK_THROWS_AS(blur(img, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(blur(img, 3.5), std::invalid_argument);
}

TEST_CASE("sharpen leaves a constant image unchanged") {
  const ImageGrid gray(32, 32, 1, 0.7);
  CHECK(max_abs_diff(gray, sharpen(gray, 1.0)) <= 1e-12);
  CHECK_THROWS_AS(sharpen(gray, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sharpen(gray, 1.5), std::invalid_argument);
}

TEST_CASE("residual spectrum: zero difference gives an all-zero spectrum") {
  const ImageGrid& img = test_corpus().images[0];
  for (const double p : compute_residual_spectrum(img, img)) CHECK(p == 0.0);
}

TEST_CASE("residual spectrum: pure sinusoid concentrates at its radius") {
  const int k = 5;
  ImageGrid a(32, 32, 1, 0.5);
  ImageGrid b = a;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      b.at(y, x) += 0.1 * std::sin(2.0 * 3.14159265358979323846 * k * y / 32.0);
  const std::vector<double> power = compute_residual_spectrum(a, b);
  int argmax = 0;
  for (std::size_t r = 1; r < power.size(); ++r)
    if (power[r] > power[argmax]) argmax = static_cast<int>(r);
  CHECK(argmax == k);
  CHECK_THROWS_AS(compute_residual_spectrum(a, ImageGrid(16, 16, 1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("identity parameterizations are identity maps within tolerance") {
  const ImageGrid& img = test_corpus().images[1];
  CHECK(max_abs_diff(img, gaussian_noise(img, 0.0, 1)) == 0.0);
  CHECK(max_abs_diff(img, crop_border(img, 0.0)) == 0.0);
  CHECK(max_abs_diff(img, affine(img, 0.0, 1.0)) <= 1e-6);
  CHECK(max_abs_diff(img, jpeg_like(img, 100)) <= 0.01);
}
