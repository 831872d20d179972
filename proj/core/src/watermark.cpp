#include "wmlab/watermark.hpp"

#include <stdexcept>

#include "wmlab/rng.hpp"

namespace wmlab {

Payload Payload::random(int length, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "payload"));
  std::vector<std::uint8_t> bits(length);
  for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
  return Payload(std::move(bits));
}

Payload Payload::complemented() const {
  Payload out = *this;
  for (auto& b : out.bits) b ^= 1;
  return out;
}

std::string Payload::to_hex() const {
  static const char digits[] = "0123456789abcdef";
  std::string hex;
  for (std::size_t i = 0; i < bits.size(); i += 4) {
    int nibble = 0;
    for (std::size_t j = 0; j < 4 && i + j < bits.size(); ++j)
      nibble |= bits[i + j] << (3 - j);
    hex.push_back(digits[nibble]);
  }
  return hex;
}

Payload Payload::from_hex(const std::string& hex, int length) {
  std::vector<std::uint8_t> bits;
  bits.reserve(hex.size() * 4);
  for (const char c : hex) {
    int nibble;
    if (c >= '0' && c <= '9')
      nibble = c - '0';
    else if (c >= 'a' && c <= 'f')
      nibble = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      nibble = c - 'A' + 10;
    else
      throw std::invalid_argument("Payload::from_hex: bad digit");
    for (int j = 3; j >= 0; --j) bits.push_back((nibble >> j) & 1);
  }
  if (static_cast<int>(bits.size()) < length)
    throw std::invalid_argument("Payload::from_hex: hex shorter than length");
  bits.resize(length);
  return Payload(std::move(bits));
}

}  // namespace wmlab
