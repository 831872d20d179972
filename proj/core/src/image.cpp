#include "wmlab/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmlab {

bool image_is_valid(const ImageGrid& img) {
  if (img.height < 8 || img.width < 8) return false;
  if (img.channels != 1 && img.channels != 3) return false;
  if (img.data.size() !=
      static_cast<std::size_t>(img.height) * img.width * img.channels)
    return false;
  for (const double v : img.data)
    if (!(v >= 0.0 && v <= 1.0)) return false;
  return true;
}

ImageGrid clamp01(ImageGrid img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

ImageGrid resize_bilinear(const ImageGrid& img, int target_size) {
  if (target_size <= 0) throw std::invalid_argument("resize: target_size <= 0");
  if (img.height == target_size && img.width == target_size) return img;

  ImageGrid out(target_size, target_size, img.channels);
  const double sy = target_size > 1
                        ? static_cast<double>(img.height - 1) / (target_size - 1)
                        : 0.0;
  const double sx = target_size > 1
                        ? static_cast<double>(img.width - 1) / (target_size - 1)
                        : 0.0;
  for (int y = 0; y < target_size; ++y) {
    const double fy = target_size > 1 ? y * sy : 0.5 * (img.height - 1);
    const int y0 = std::min(static_cast<int>(fy), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_size; ++x) {
      const double fx = target_size > 1 ? x * sx : 0.5 * (img.width - 1);
      const int x0 = std::min(static_cast<int>(fx), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageGrid luminance(const ImageGrid& img) {
  if (img.channels == 1) return img;
  ImageGrid y(img.height, img.width, 1);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      y.at(r, c) = 0.299 * img.at(r, c, 0) + 0.587 * img.at(r, c, 1) +
                   0.114 * img.at(r, c, 2);
  return y;
}

ImageGrid replace_luminance(const ImageGrid& rgb, const ImageGrid& new_luma) {
  if (rgb.channels == 1) return new_luma;
  if (new_luma.channels != 1 || new_luma.height != rgb.height ||
      new_luma.width != rgb.width)
    throw std::invalid_argument("replace_luminance: shape mismatch");
  ImageGrid out = rgb;
  const ImageGrid old_luma = luminance(rgb);
  for (int r = 0; r < rgb.height; ++r)
    for (int c = 0; c < rgb.width; ++c) {
      const double dy = new_luma.at(r, c) - old_luma.at(r, c);
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = rgb.at(r, c, ch) + dy;
    }
  return out;
}

double mean_intensity(const ImageGrid& img) {
  double s = 0.0;
  for (const double v : img.data) s += v;
  return img.data.empty() ? 0.0 : s / static_cast<double>(img.data.size());
}

double pixel_correlation(const ImageGrid& a, const ImageGrid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("correlation: shape mismatch");
  const std::size_t n = a.data.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.data[i];
    mb += b.data[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.data[i] - ma;
    const double db = b.data[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace wmlab
