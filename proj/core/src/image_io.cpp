#include "wmlab/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "wmlab/errors.hpp"

namespace wmlab {
namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// ---------------------------------------------------------------- PNG ----

constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + payload.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK)
    throw IoError("png: deflate failed");
  out.resize(bound);
  return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& comp,
                                       std::size_t expected_size) {
  std::vector<std::uint8_t> out(expected_size);
  uLongf out_size = static_cast<uLongf>(expected_size);
  const int rc = uncompress(out.data(), &out_size, comp.data(),
                            static_cast<uLong>(comp.size()));
  if (rc != Z_OK || out_size != expected_size)
    throw IoError("png: inflate failed or size mismatch");
  return out;
}

void write_png(const ImageGrid& img, const std::string& path) {
  const int ch = img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (1 + img.width * ch));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < ch; ++c) raw.push_back(quantize(img.at(y, x, c)));
  }

  std::vector<std::uint8_t> file(kPngSignature, kPngSignature + 8);
  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);                                  // bit depth
  ihdr.push_back(ch == 1 ? 0 : 2);                    // color type
  ihdr.push_back(0);                                  // compression
  ihdr.push_back(0);                                  // filter method
  ihdr.push_back(0);                                  // interlace
  append_chunk(file, "IHDR", ihdr);
  append_chunk(file, "IDAT", zlib_deflate(raw));
  append_chunk(file, "IEND", {});
  write_file(path, file);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageGrid read_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  if (bytes.size() < 8 + 25) throw IoError("png: truncated file: " + path);
  std::size_t pos = 8;
  int width = 0, height = 0, channels = 0;
  bool have_header = false;
  std::vector<std::uint8_t> idat;

  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32_be(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw IoError("png: truncated chunk: " + path);
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const std::uint8_t* payload = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw IoError("png: bad IHDR: " + path);
      width = static_cast<int>(get_u32_be(payload));
      height = static_cast<int>(get_u32_be(payload + 4));
      const int bit_depth = payload[8];
      const int color_type = payload[9];
      const int interlace = payload[12];
      if (bit_depth != 8)
        throw IoError("png: only 8-bit depth supported: " + path);
      if (interlace != 0)
        throw IoError("png: interlaced files not supported: " + path);
      if (color_type == 0)
        channels = 1;
      else if (color_type == 2)
        channels = 3;
      else
        throw IoError("png: only gray and RGB color types supported: " + path);
      have_header = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_header || width <= 0 || height <= 0)
    throw IoError("png: missing/invalid IHDR: " + path);

  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  const std::size_t raw_size = static_cast<std::size_t>(height) * (stride + 1);
  std::vector<std::uint8_t> raw = zlib_inflate(idat, raw_size);

  // Undo per-row filters in place.
  const int bpp = channels;
  std::vector<std::uint8_t> prev(stride, 0);
  ImageGrid img(height, width, channels);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[static_cast<std::size_t>(y) * (stride + 1)];
    std::uint8_t* row = &raw[static_cast<std::size_t>(y) * (stride + 1) + 1];
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<std::size_t>(bpp) ? row[i - bpp] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int v = row[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw IoError("png: unknown filter type: " + path);
      }
      row[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::copy(row, row + stride, prev.begin());
    for (int x = 0; x < width; ++x)
      for (int c2 = 0; c2 < channels; ++c2)
        img.at(y, x, c2) = row[static_cast<std::size_t>(x) * channels + c2] / 255.0;
  }
  return img;
}

// ----------------------------------------------------------- PGM / PPM ----

void write_pnm(const ImageGrid& img, const std::string& path, bool color) {
  if (color && img.channels != 3)
    throw IoError("ppm requires a 3-channel image: " + path);
  if (!color && img.channels != 1)
    throw IoError("pgm requires a 1-channel image: " + path);
  std::vector<std::uint8_t> file;
  const std::string header = std::string(color ? "P6" : "P5") + "\n" +
                             std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  file.insert(file.end(), header.begin(), header.end());
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        file.push_back(quantize(img.at(y, x, c)));
  write_file(path, file);
}

ImageGrid read_pnm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]))
      tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };

  const std::string magic = next_token();
  const bool color = magic == "P6";
  if (magic != "P5" && magic != "P6")
    throw IoError("pnm: unsupported magic '" + magic + "': " + path);
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw IoError("pnm: bad header: " + path);
  ++pos;  // single whitespace after maxval
  const int channels = color ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - pos < need) throw IoError("pnm: truncated pixel data: " + path);
  ImageGrid img(height, width, channels);
  for (std::size_t i = 0; i < need; ++i)
    img.data[i] = static_cast<double>(bytes[pos + i]) / maxval;
  return img;
}

std::string lower_extension(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

ImageGrid load_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
    return read_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
    return read_pnm(bytes, path);
  throw IoError("unrecognized image format: " + path);
}

void write_image(const ImageGrid& img, const std::string& path) {
  if (img.height <= 0 || img.width <= 0)
    throw IoError("write_image: empty image: " + path);
  const std::string ext = lower_extension(path);
  if (ext == "png")
    write_png(img, path);
  else if (ext == "pgm")
    write_pnm(img, path, /*color=*/false);
  else if (ext == "ppm")
    write_pnm(img, path, /*color=*/true);
  else
    throw IoError("write_image: unsupported extension '" + ext + "': " + path);
}

}  // namespace wmlab
