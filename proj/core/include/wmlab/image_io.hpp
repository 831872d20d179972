#pragma once

#include <string>

#include "wmlab/image.hpp"

namespace wmlab {

// Reads a PNG (8-bit gray or RGB) or binary PGM/PPM file into [0,1]
// intensities. Format is detected from the file's magic bytes.
// Throws IoError on missing/malformed files and unsupported PNG variants
// (palette, alpha, 16-bit, interlaced).
ImageGrid load_image(const std::string& path);

// Writes 8-bit PNG (.png), PGM (.pgm, single channel) or PPM (.ppm, RGB),
// chosen by file extension. Values are clamped to [0,1] and quantized with
// round(v * 255), so load(write(x)) recovers x within 1/255 per channel and
// a second write of the loaded image is byte-identical to the first.
void write_image(const ImageGrid& img, const std::string& path);

}  // namespace wmlab
