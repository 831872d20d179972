#pragma once

#include <cstdint>
#include <vector>

#include "wmlab/corpus.hpp"
#include "wmlab/image.hpp"
#include "wmlab/watermark.hpp"

namespace wmlab {

// Configuration of the DCT-domain spread-spectrum codec. The band is the
// mid-frequency annulus of global 2-D DCT indices with band_lo <= u+v <=
// band_hi; chips for distinct bits are disjoint coefficient sets inside it.
//
// chips_per_bit = 0 selects the largest feasible value, capped at 64:
// min(64, band_size / payload_length). The cap applies whenever the band is
// large enough; at the 32x32 working size the [6,20] band holds 210
// coefficients, so a 16-bit payload gets 13 chips per bit.
struct SpreadSpectrumConfig {
  double strength_alpha = 0.017;  // DCT-coefficient units; default meets PSNR >= 40 dB
  int band_lo = 6;
  int band_hi = 20;
  int chips_per_bit = 0;
};

class SpreadSpectrumCodec : public WatermarkDecoder {
public:
  // Throws CapacityError when payload_length * chips_per_bit exceeds the
  // band size (or the automatic choice cannot fit one chip per bit).
  SpreadSpectrumCodec(int payload_length, WatermarkKey key,
                      SpreadSpectrumConfig config);

  std::string name() const override { return "ss"; }
  int payload_length() const override { return payload_length_; }
  int chips_per_bit() const { return chips_per_bit_; }
  int band_size() const { return static_cast<int>(band_coords_.size()); }
  const SpreadSpectrumConfig& config() const { return config_; }
  const WatermarkKey& key() const { return key_; }

  // output = IDCT(DCT(image) + alpha * sum_i b_i p_i), clamped to [0,1];
  // luminance plane only for RGB input.
  ImageGrid embed(const ImageGrid& image, const Payload& payload) const;

  // The pixel-domain watermark pattern added to the luminance plane
  // (image independent, pre-clamp). Linear in the payload's signed bits.
  ImageGrid residual(const Payload& payload, int image_size) const;

  // bit_i = [z_i > 0] with z_i the chip correlation; confidence_i =
  // |z_i| / (alpha * chips_per_bit).
  Payload decode(const ImageGrid& image,
                 std::vector<double>* confidences = nullptr) const override;

  // Raw correlation statistics z_i.
  std::vector<double> correlations(const ImageGrid& image) const;

  // Correlation value the embedding would place for a given target bit.
  double nominal_correlation(int bit_value) const;

  // Exact closed-form gradient of sum_i (z_i - z~_i)^2 with respect to the
  // image, z~ the nominal correlations of `target`.
  ImageGrid loss_gradient(const ImageGrid& image,
                          const Payload& target) const override;

  // Per-bit signal amplitude ||alpha p_i|| mapped into the normalized model
  // space (x - 0.5)/0.5, the `a` consumed by the analytic MI channel.
  double amplitude_normalized() const;

  // The DCT coefficient coordinates (u*stride + v encoding is internal; this
  // returns (u,v) pairs) of bit i's chips, for analysis and tests.
  std::vector<std::pair<int, int>> chip_coords(int bit) const;

private:
  void check_image(const ImageGrid& image) const;

  int payload_length_;
  WatermarkKey key_;
  SpreadSpectrumConfig config_;
  int chips_per_bit_;
  std::vector<std::pair<int, int>> band_coords_;  // shuffled by key
  std::vector<double> chip_signs_;                // +-1 per (bit, chip)
};

// Bisects strength_alpha so that the corpus-mean embedding PSNR hits
// target_psnr_db (random payloads, seeded). Returns the calibrated alpha.
double calibrate_ss_alpha(const Corpus& corpus, int payload_length,
                          WatermarkKey key, SpreadSpectrumConfig config,
                          double target_psnr_db, std::uint64_t seed);

}  // namespace wmlab
