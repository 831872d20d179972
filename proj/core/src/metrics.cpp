#include "wmlab/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wmlab {

DecodeMetrics bit_metrics(const Payload& truth, const Payload& decoded) {
  if (truth.length() != decoded.length())
    throw std::invalid_argument("bit_metrics: payload length mismatch");
  if (truth.length() == 0)
    throw std::invalid_argument("bit_metrics: empty payloads");
  int matches = 0;
  for (int i = 0; i < truth.length(); ++i)
    matches += truth.bits[i] == decoded.bits[i];
  DecodeMetrics m;
  m.bit_accuracy = static_cast<double>(matches) / truth.length();
  m.ber = 1.0 - m.bit_accuracy;
  m.payload_success = matches == truth.length();
  return m;
}

double psnr(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> ssim_window() {
  // 11x11 Gaussian, sigma 1.5, normalized to sum 1.
  std::vector<double> w(11 * 11);
  double sum = 0.0;
  for (int y = 0; y < 11; ++y)
    for (int x = 0; x < 11; ++x) {
      const double dy = y - 5.0, dx = x - 5.0;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      w[y * 11 + x] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height < 11 || a.width < 11)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  static const std::vector<double> window = ssim_window();
  const double c1 = 0.01 * 0.01;  // (K1 L)^2 with L = 1
  const double c2 = 0.03 * 0.03;

  double total = 0.0;
  long count = 0;
  for (int ch = 0; ch < a.channels; ++ch) {
    for (int y = 0; y + 11 <= a.height; ++y) {
      for (int x = 0; x + 11 <= a.width; ++x) {
        double mu_a = 0.0, mu_b = 0.0;
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int wy = 0; wy < 11; ++wy)
          for (int wx = 0; wx < 11; ++wx) {
            const double w = window[wy * 11 + wx];
            const double va = a.at(y + wy, x + wx, ch);
            const double vb = b.at(y + wy, x + wx, ch);
            mu_a += w * va;
            mu_b += w * vb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        const double var_a = saa - mu_a * mu_a;
        const double var_b = sbb - mu_b * mu_b;
        const double cov = sab - mu_a * mu_b;
        const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
        const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        total += num / den;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

FidelityMetrics fidelity(const ImageGrid& a, const ImageGrid& b) {
  return FidelityMetrics{psnr(a, b), ssim(a, b)};
}

}  // namespace wmlab
