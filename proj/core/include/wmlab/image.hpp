#pragma once

#include <cstddef>
#include <vector>

namespace wmlab {

// Row-major H x W x C grid of real intensities, nominally in [0, 1].
// Channels is 1 (gray) or 3 (RGB). The [0,1] range is maintained by the
// operations that produce images (embedding, attacks, IO), not enforced at
// construction, so intermediate unclamped values can be represented.
struct ImageGrid {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  ImageGrid() = default;
  ImageGrid(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageGrid& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// True when every element lies in [0,1] and both dimensions are >= 8
// (block transforms need 8x8 tiles).
bool image_is_valid(const ImageGrid& img);

ImageGrid clamp01(ImageGrid img);

// Bilinear resample to size x size with a corner-aligned sampling grid
// (source position = dst_index * (S-1)/(D-1)). Resampling a constant image
// yields the same constant exactly.
ImageGrid resize_bilinear(const ImageGrid& img, int target_size);

// ITU-R 601 luminance of an RGB image; identity for single-channel input.
ImageGrid luminance(const ImageGrid& img);

// Replaces the luminance plane of an RGB image, keeping chroma untouched.
// For single-channel images returns new_luma directly.
ImageGrid replace_luminance(const ImageGrid& rgb, const ImageGrid& new_luma);

double mean_intensity(const ImageGrid& img);

// Pearson correlation between the pixel values of two same-shape grids.
double pixel_correlation(const ImageGrid& a, const ImageGrid& b);

}  // namespace wmlab
