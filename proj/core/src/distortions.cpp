#include "wmlab/distortions.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "wmlab/dct.hpp"
#include "wmlab/rng.hpp"

namespace wmlab {
namespace {

// Annex K luminance quantization table.
constexpr int kQuantTable[8][8] = {
    {16, 11, 10, 16, 24, 40, 51, 61},
    {12, 12, 14, 19, 26, 58, 60, 55},
    {14, 13, 16, 24, 40, 57, 69, 56},
    {14, 17, 22, 29, 51, 87, 80, 62},
    {18, 22, 37, 56, 68, 109, 103, 77},
    {24, 35, 55, 64, 81, 104, 113, 92},
    {49, 64, 78, 87, 103, 121, 120, 101},
    {72, 92, 95, 98, 112, 100, 103, 99},
};

int reflect_index(int i, int n) {
  // Half-sample symmetric reflection: -1 -> 0, n -> n-1.
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

ImageGrid jpeg_like_plane(const ImageGrid& plane, int quality) {
  const int h = plane.height, w = plane.width;
  const int ph = (h + 7) / 8 * 8;
  const int pw = (w + 7) / 8 * 8;

  // Reflect-pad to a multiple of 8, 255-scale, -128 level shift.
  std::vector<double> buf(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      buf[static_cast<std::size_t>(y) * pw + x] =
          plane.at(reflect_index(y, h), reflect_index(x, w)) * 255.0 - 128.0;

  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  double qtab[8][8];
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      const long q = std::lround(kQuantTable[u][v] * scale / 100.0);
      qtab[u][v] = static_cast<double>(std::clamp(q, 1L, 255L));
    }

  const DctPlan& plan = DctPlan::cached(8);
  std::vector<double> block(64), coeffs(64);
  for (int by = 0; by < ph; by += 8) {
    for (int bx = 0; bx < pw; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          block[y * 8 + x] = buf[static_cast<std::size_t>(by + y) * pw + bx + x];
      coeffs = plan.forward_2d(block);
      for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
          const double q = qtab[u][v];
          coeffs[u * 8 + v] = q * std::round(coeffs[u * 8 + v] / q);
        }
      block = plan.inverse_2d(coeffs);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          buf[static_cast<std::size_t>(by + y) * pw + bx + x] = block[y * 8 + x];
    }
  }

  ImageGrid out(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(y, x) = std::clamp(
          (buf[static_cast<std::size_t>(y) * pw + x] + 128.0) / 255.0, 0.0, 1.0);
  return out;
}

}  // namespace

int jpeg_quant_table(int row, int col) { return kQuantTable[row][col]; }

ImageGrid jpeg_like(const ImageGrid& image, int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("jpeg_like: quality must lie in [1,100]");
  if (image.channels == 1) return jpeg_like_plane(image, quality);
  const ImageGrid luma = luminance(image);
  return clamp01(replace_luminance(image, jpeg_like_plane(luma, quality)));
}

ImageGrid gaussian_noise(const ImageGrid& image, double sigma_255,
                         std::uint64_t seed) {
  if (sigma_255 < 0.0)
    throw std::invalid_argument("gaussian_noise: sigma must be >= 0");
  if (sigma_255 == 0.0) return image;
  Rng rng(derive_seed(seed, "gaussian-noise"));
  const double sigma = sigma_255 / 255.0;
  ImageGrid out = image;
  for (double& v : out.data) v = std::clamp(v + sigma * rng.gaussian(), 0.0, 1.0);
  return out;
}

int crop_border_width(int height, int width, double area_fraction) {
  if (area_fraction == 0.0) return 0;
  const double total = static_cast<double>(height) * width;
  for (int w = 1; 2 * w < std::min(height, width); ++w) {
    const double kept = static_cast<double>(height - 2 * w) * (width - 2 * w);
    if (1.0 - kept / total >= area_fraction) return w;
  }
  throw std::invalid_argument("crop_border: fraction removes too much of the image");
}

ImageGrid crop_border(const ImageGrid& image, double area_fraction) {
  if (area_fraction < 0.0 || area_fraction >= 0.5)
    throw std::invalid_argument("crop_border: area_fraction must lie in [0, 0.5)");
  const int w = crop_border_width(image.height, image.width, area_fraction);
  if (w == 0) return image;
  ImageGrid out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const bool border = y < w || y >= image.height - w || x < w ||
                          x >= image.width - w;
      if (border)
        for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = 0.5;
    }
  return out;
}

ImageGrid affine(const ImageGrid& image, double angle_deg, double scale) {
  if (std::abs(angle_deg) > 5.0)
    throw std::invalid_argument("affine: |angle| must be <= 5 degrees");
  if (scale < 0.9 || scale > 1.1)
    throw std::invalid_argument("affine: scale must lie in [0.9, 1.1]");

  const double theta = angle_deg * 3.14159265358979323846 / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cy = (image.height - 1) / 2.0;
  const double cx = (image.width - 1) / 2.0;

  ImageGrid out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // Inverse map: unscale then unrotate about the center.
      const double dx = (x - cx) / scale;
      const double dy = (y - cy) / scale;
      const double sx = cx + cos_t * dx + sin_t * dy;
      const double sy = cy - sin_t * dx + cos_t * dy;
      if (sx < 0.0 || sy < 0.0 || sx > image.width - 1 || sy > image.height - 1) {
        for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = 0.5;
        continue;
      }
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const int y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < image.channels; ++c) {
        const double top =
            image.at(y0, x0, c) * (1 - fx) + image.at(y0, x1, c) * fx;
        const double bot =
            image.at(y1, x0, c) * (1 - fx) + image.at(y1, x1, c) * fx;
        out.at(y, x, c) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

ImageGrid blur(const ImageGrid& image, double kernel_sigma) {
  if (!(kernel_sigma > 0.0) || kernel_sigma > 3.0)
    throw std::invalid_argument("blur: kernel_sigma must lie in (0, 3]");
  const int radius = static_cast<int>(std::ceil(3.0 * kernel_sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * kernel_sigma * kernel_sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  ImageGrid tmp(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] *
                 image.at(y, reflect_index(x + i, image.width), c);
        tmp.at(y, x, c) = acc;
      }
  ImageGrid out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < image.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] *
                 tmp.at(reflect_index(y + i, image.height), x, c);
        out.at(y, x, c) = acc;
      }
  return out;
}

ImageGrid sharpen(const ImageGrid& image, double amount) {
  if (!(amount > 0.0) || amount > 1.0)
    throw std::invalid_argument("sharpen: amount must lie in (0, 1]");
  const ImageGrid smooth = blur(image, 1.0);
  ImageGrid out = image;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = std::clamp(
        image.data[i] + amount * (image.data[i] - smooth.data[i]), 0.0, 1.0);
  return out;
}

std::vector<double> compute_residual_spectrum(const ImageGrid& a,
                                              const ImageGrid& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("compute_residual_spectrum: shape mismatch");
  const ImageGrid da = luminance(a);
  const ImageGrid db = luminance(b);
  const int h = a.height, w = a.width;

  std::vector<std::complex<double>> diff(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      diff[static_cast<std::size_t>(y) * w + x] = da.at(y, x) - db.at(y, x);

  // Separable naive DFT; fine at the working sizes.
  const auto dft_axis = [](std::vector<std::complex<double>>& data, int rows,
                           int cols, bool along_cols) {
    const int n = along_cols ? rows : cols;
    std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(n) * n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        twiddle[static_cast<std::size_t>(k) * n + i] =
            std::polar(1.0, -2.0 * 3.14159265358979323846 * k * i / n);
    std::vector<std::complex<double>> line(n), out_line(n);
    const int other = along_cols ? cols : rows;
    for (int j = 0; j < other; ++j) {
      for (int i = 0; i < n; ++i)
        line[i] = along_cols ? data[static_cast<std::size_t>(i) * cols + j]
                             : data[static_cast<std::size_t>(j) * cols + i];
      for (int k = 0; k < n; ++k) {
        std::complex<double> s = 0.0;
        for (int i = 0; i < n; ++i)
          s += twiddle[static_cast<std::size_t>(k) * n + i] * line[i];
        out_line[k] = s;
      }
      for (int k = 0; k < n; ++k) {
        if (along_cols)
          data[static_cast<std::size_t>(k) * cols + j] = out_line[k];
        else
          data[static_cast<std::size_t>(j) * cols + k] = out_line[k];
      }
    }
  };
  dft_axis(diff, h, w, /*along_cols=*/false);
  dft_axis(diff, h, w, /*along_cols=*/true);

  const int max_radius = static_cast<int>(
      std::lround(std::sqrt((h / 2.0) * (h / 2.0) + (w / 2.0) * (w / 2.0))));
  std::vector<double> power(max_radius + 1, 0.0);
  std::vector<long> counts(max_radius + 1, 0);
  for (int u = 0; u < h; ++u) {
    const int fu = u <= h / 2 ? u : u - h;
    for (int v = 0; v < w; ++v) {
      const int fv = v <= w / 2 ? v : v - w;
      const int r = static_cast<int>(
          std::lround(std::sqrt(static_cast<double>(fu) * fu + fv * fv)));
      const double p = std::norm(diff[static_cast<std::size_t>(u) * w + v]);
      power[r] += p;
      counts[r] += 1;
    }
  }
  for (int r = 0; r <= max_radius; ++r)
    if (counts[r] > 0) power[r] /= static_cast<double>(counts[r]);
  return power;
}

}  // namespace wmlab
