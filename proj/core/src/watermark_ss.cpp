#include "wmlab/watermark_ss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wmlab/dct.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/metrics.hpp"
#include "wmlab/rng.hpp"

namespace wmlab {

SpreadSpectrumCodec::SpreadSpectrumCodec(int payload_length, WatermarkKey key,
                                         SpreadSpectrumConfig config)
    : payload_length_(payload_length), key_(key), config_(config) {
  if (payload_length <= 0)
    throw std::invalid_argument("SpreadSpectrumCodec: payload_length <= 0");
  if (config.band_lo < 1 || config.band_hi <= config.band_lo)
    throw std::invalid_argument("SpreadSpectrumCodec: bad band");
  if (!(config.strength_alpha >= 0.0))
    throw std::invalid_argument("SpreadSpectrumCodec: alpha must be >= 0");

  for (int s = config.band_lo; s <= config.band_hi; ++s)
    for (int u = 0; u <= s; ++u) band_coords_.emplace_back(u, s - u);

  const int band = static_cast<int>(band_coords_.size());
  chips_per_bit_ = config.chips_per_bit;
  if (chips_per_bit_ == 0) chips_per_bit_ = std::min(64, band / payload_length_);
  if (chips_per_bit_ <= 0 || payload_length_ * chips_per_bit_ > band)
    throw CapacityError("spread-spectrum capacity exceeded: " +
                        std::to_string(payload_length_) + " bits x " +
                        std::to_string(chips_per_bit_) + " chips > band of " +
                        std::to_string(band));
  config_.chips_per_bit = chips_per_bit_;

  // Key-derived chip assignment, stratified by ring: shuffle within each
  // ring, then deal the band to bits round-robin, so every bit's chip set
  // samples low and high rings evenly. Host interference varies strongly
  // with the ring, and an even mixture keeps the per-bit correlation
  // channels statistically identical.
  Rng rng(derive_seed(key_.seed, "ss-chips"));
  {
    std::size_t ring_start = 0;
    for (int s = config.band_lo; s <= config.band_hi; ++s) {
      const std::size_t ring_len = static_cast<std::size_t>(s) + 1;
      for (std::size_t i = ring_len; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(band_coords_[ring_start + i - 1], band_coords_[ring_start + j]);
      }
      ring_start += ring_len;
    }
    std::vector<std::pair<int, int>> dealt(band_coords_.size());
    const int L = payload_length_;
    // Position k of the ring-ordered band goes to bit (k mod L), slot k/L.
    std::vector<std::size_t> filled(L, 0);
    std::size_t spare = static_cast<std::size_t>(L) * chips_per_bit_;
    for (std::size_t k = 0; k < band_coords_.size(); ++k) {
      const int bit = static_cast<int>(k % L);
      if (filled[bit] < static_cast<std::size_t>(chips_per_bit_)) {
        dealt[static_cast<std::size_t>(bit) * chips_per_bit_ + filled[bit]] =
            band_coords_[k];
        ++filled[bit];
      } else {
        dealt[spare++] = band_coords_[k];  // unused remainder of the band
      }
    }
    band_coords_ = std::move(dealt);
  }
  chip_signs_.resize(static_cast<std::size_t>(payload_length_) * chips_per_bit_);
  for (double& s : chip_signs_) s = rng.bernoulli(0.5) ? 1.0 : -1.0;
}

void SpreadSpectrumCodec::check_image(const ImageGrid& image) const {
  if (image.height != image.width)
    throw std::invalid_argument("SpreadSpectrumCodec: image must be square");
  if (image.height <= config_.band_hi)
    throw std::invalid_argument(
        "SpreadSpectrumCodec: image too small for the configured band");
}

ImageGrid SpreadSpectrumCodec::residual(const Payload& payload,
                                        int image_size) const {
  if (payload.length() != payload_length_)
    throw std::invalid_argument("SpreadSpectrumCodec: payload length mismatch");
  const DctPlan& plan = DctPlan::cached(image_size);
  std::vector<double> coeffs(static_cast<std::size_t>(image_size) * image_size,
                             0.0);
  for (int i = 0; i < payload_length_; ++i) {
    const double b = payload.bits[i] ? 1.0 : -1.0;
    for (int j = 0; j < chips_per_bit_; ++j) {
      const auto [u, v] = band_coords_[i * chips_per_bit_ + j];
      coeffs[static_cast<std::size_t>(u) * image_size + v] +=
          config_.strength_alpha * b * chip_signs_[i * chips_per_bit_ + j];
    }
  }
  ImageGrid out(image_size, image_size, 1);
  out.data = plan.inverse_2d(coeffs);
  return out;
}

ImageGrid SpreadSpectrumCodec::embed(const ImageGrid& image,
                                     const Payload& payload) const {
  check_image(image);
  const ImageGrid pattern = residual(payload, image.height);
  ImageGrid luma = luminance(image);
  for (std::size_t i = 0; i < luma.data.size(); ++i)
    luma.data[i] += pattern.data[i];
  return clamp01(replace_luminance(image, luma));
}

std::vector<double> SpreadSpectrumCodec::correlations(
    const ImageGrid& image) const {
  check_image(image);
  const ImageGrid luma = luminance(image);
  const int n = image.height;
  const std::vector<double> coeffs = DctPlan::cached(n).forward_2d(luma.data);
  std::vector<double> z(payload_length_, 0.0);
  for (int i = 0; i < payload_length_; ++i)
    for (int j = 0; j < chips_per_bit_; ++j) {
      const auto [u, v] = band_coords_[i * chips_per_bit_ + j];
      z[i] += coeffs[static_cast<std::size_t>(u) * n + v] *
              chip_signs_[i * chips_per_bit_ + j];
    }
  return z;
}

double SpreadSpectrumCodec::nominal_correlation(int bit_value) const {
  return config_.strength_alpha * chips_per_bit_ * (bit_value ? 1.0 : -1.0);
}

Payload SpreadSpectrumCodec::decode(const ImageGrid& image,
                                    std::vector<double>* confidences) const {
  const std::vector<double> z = correlations(image);
  Payload payload;
  payload.bits.resize(payload_length_);
  if (confidences) confidences->resize(payload_length_);
  const double denom = config_.strength_alpha * chips_per_bit_;
  for (int i = 0; i < payload_length_; ++i) {
    payload.bits[i] = z[i] > 0.0 ? 1 : 0;
    if (confidences)
      (*confidences)[i] = denom > 0.0 ? std::abs(z[i]) / denom : 0.0;
  }
  return payload;
}

ImageGrid SpreadSpectrumCodec::loss_gradient(const ImageGrid& image,
                                             const Payload& target) const {
  if (target.length() != payload_length_)
    throw std::invalid_argument("SpreadSpectrumCodec: target length mismatch");
  const std::vector<double> z = correlations(image);
  const int n = image.height;

  // dL/d coeff = 2 (z_i - z~_i) * sign_ij on bit i's chips; back through the
  // orthonormal DCT this is an exact inverse transform of the weights.
  std::vector<double> coeff_grad(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < payload_length_; ++i) {
    const double w = 2.0 * (z[i] - nominal_correlation(target.bits[i]));
    for (int j = 0; j < chips_per_bit_; ++j) {
      const auto [u, v] = band_coords_[i * chips_per_bit_ + j];
      coeff_grad[static_cast<std::size_t>(u) * n + v] +=
          w * chip_signs_[i * chips_per_bit_ + j];
    }
  }
  ImageGrid luma_grad(n, n, 1);
  luma_grad.data = DctPlan::cached(n).inverse_2d(coeff_grad);

  if (image.channels == 1) return luma_grad;
  // Chain rule through the ITU-R 601 luminance weights.
  ImageGrid grad(n, n, 3);
  static const double w601[3] = {0.299, 0.587, 0.114};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c)
        grad.at(y, x, c) = w601[c] * luma_grad.at(y, x);
  return grad;
}

double SpreadSpectrumCodec::amplitude_normalized() const {
  return 2.0 * config_.strength_alpha * std::sqrt(chips_per_bit_);
}

std::vector<std::pair<int, int>> SpreadSpectrumCodec::chip_coords(int bit) const {
  std::vector<std::pair<int, int>> coords;
  for (int j = 0; j < chips_per_bit_; ++j)
    coords.push_back(band_coords_[bit * chips_per_bit_ + j]);
  return coords;
}

double calibrate_ss_alpha(const Corpus& corpus, int payload_length,
                          WatermarkKey key, SpreadSpectrumConfig config,
                          double target_psnr_db, std::uint64_t seed) {
  if (corpus.size() == 0) throw CorpusError("calibrate_ss_alpha: empty corpus");
  const auto mean_psnr = [&](double alpha) {
    SpreadSpectrumConfig c = config;
    c.strength_alpha = alpha;
    SpreadSpectrumCodec codec(payload_length, key, c);
    double total = 0.0;
    for (int i = 0; i < corpus.size(); ++i) {
      const Payload payload =
          Payload::random(payload_length, derive_seed(seed, "ss-calib", i));
      total += psnr(corpus.images[i], codec.embed(corpus.images[i], payload));
    }
    return total / corpus.size();
  };

  // PSNR decreases monotonically in alpha; bisect on the crossing.
  double lo = 1e-4, hi = 0.5;
  if (mean_psnr(lo) < target_psnr_db)
    throw std::invalid_argument("calibrate_ss_alpha: target PSNR unreachable");
  for (int iter = 0; iter < 48; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mean_psnr(mid) >= target_psnr_db)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace wmlab
