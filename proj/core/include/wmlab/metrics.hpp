#pragma once

#include "wmlab/image.hpp"
#include "wmlab/watermark.hpp"

namespace wmlab {

struct DecodeMetrics {
  double bit_accuracy = 0.0;
  double ber = 0.0;  // 1 - bit_accuracy, exactly
  bool payload_success = false;
};

struct FidelityMetrics {
  double psnr_db = 0.0;  // +inf for identical images, MAX = 1
  double ssim = 0.0;
};

// Throws std::invalid_argument on length mismatch.
DecodeMetrics bit_metrics(const Payload& truth, const Payload& decoded);

// 10 log10(1 / MSE) over all pixels and channels, intensities in [0,1].
// Identical images give +infinity (reported as "inf" in CSV, never capped).
double psnr(const ImageGrid& a, const ImageGrid& b);

// Single-scale SSIM: 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
// dynamic range 1, averaged over valid window positions and channels.
// Throws when the image is smaller than the window.
double ssim(const ImageGrid& a, const ImageGrid& b);

FidelityMetrics fidelity(const ImageGrid& a, const ImageGrid& b);

}  // namespace wmlab
