#pragma once

#include <cstdint>
#include <vector>

#include "wmlab/image.hpp"

namespace wmlab {

// Conventional distortion attacks. Each is a pure function of
// (input, parameters, seed) and is the identity map at its identity
// parameterization within the documented tolerance.

// Block-DCT quantization specified bit-exactly: per 8x8 block (reflect-pad
// when dimensions are not divisible by 8), work in 255-scale with -128 level
// shift, quantize each coefficient to the nearest multiple of
// Q'(u,v) = clamp(round(Qstd(u,v) * scale / 100), 1, 255),
// scale = quality < 50 ? 5000/quality : 200 - 2*quality.
// RGB images are processed on the luminance plane, chroma untouched.
ImageGrid jpeg_like(const ImageGrid& image, int quality);

// Returns the standard luminance quantization table entry (row, col).
int jpeg_quant_table(int row, int col);

// image + N(0, (sigma_255/255)^2) i.i.d. per pixel, clamped, seeded.
ImageGrid gaussian_noise(const ImageGrid& image, double sigma_255,
                         std::uint64_t seed);

// Replaces a border of width w by mid-gray 0.5, where w is the smallest
// integer whose removed area fraction reaches area_fraction. Dimensions are
// unchanged. area_fraction 0 is the identity.
ImageGrid crop_border(const ImageGrid& image, double area_fraction);
int crop_border_width(int height, int width, double area_fraction);

// Rotate by angle_deg and scale about the image center, bilinear resampling,
// mid-gray fill outside the source. |angle| <= 5, scale in [0.9, 1.1].
ImageGrid affine(const ImageGrid& image, double angle_deg, double scale);

// Gaussian blur, kernel radius ceil(3 sigma), symmetric-reflect padding.
// The kernel sums to 1, so mean intensity is preserved exactly (pre-clamp).
ImageGrid blur(const ImageGrid& image, double kernel_sigma);

// image + amount * (image - blur(image, 1.0)), clamped.
ImageGrid sharpen(const ImageGrid& image, double amount);

// Radially averaged 2-D DFT power spectrum of (a - b), DC bin first.
// Multi-channel inputs are compared on their luminance planes.
std::vector<double> compute_residual_spectrum(const ImageGrid& a,
                                              const ImageGrid& b);

}  // namespace wmlab
