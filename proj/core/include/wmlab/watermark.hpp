#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmlab/image.hpp"

namespace wmlab {

// Hidden bit-string embedded by a watermark encoder. Lengths 16/32/56 are
// the supported experiment settings; all codecs in one run share a length.
struct Payload {
  std::vector<std::uint8_t> bits;  // each 0 or 1

  Payload() = default;
  explicit Payload(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

  int length() const { return static_cast<int>(bits.size()); }

  static Payload zeros(int length) {
    return Payload(std::vector<std::uint8_t>(length, 0));
  }
  static Payload random(int length, std::uint64_t seed);

  Payload complemented() const;

  // Hex rendering used in reports: bit 0 is the MSB of the first digit.
  std::string to_hex() const;
  static Payload from_hex(const std::string& hex, int length);

  bool operator==(const Payload& o) const { return bits == o.bits; }
};

// Secret seed controlling spreading patterns, chip assignment and band use.
struct WatermarkKey {
  std::uint64_t seed = 0;
};

// Decoder surface shared by the spread-spectrum and learned codecs so the
// guided attack can treat either as its target.
class WatermarkDecoder {
public:
  virtual ~WatermarkDecoder() = default;
  virtual std::string name() const = 0;
  virtual int payload_length() const = 0;

  // Decoded bits plus per-bit real-valued scores (correlation confidences
  // for the spread-spectrum codec, logits for the learned one).
  virtual Payload decode(const ImageGrid& image,
                         std::vector<double>* scores = nullptr) const = 0;

  // Gradient with respect to the image of the squared error between the
  // decoder's continuous outputs and the targets implied by `target`.
  virtual ImageGrid loss_gradient(const ImageGrid& image,
                                  const Payload& target) const = 0;
};

}  // namespace wmlab
