#include "wmlab/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "wmlab/errors.hpp"

namespace wmlab {
namespace {

constexpr char kMagic[4] = {'W', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
  const auto n = read_pod<std::uint64_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw IoError("checkpoint: truncated string");
  return s;
}

}  // namespace

void Checkpoint::add_array(const std::string& name, std::vector<int> shape,
                           std::vector<double> data) {
  std::size_t expected = 1;
  for (const int d : shape) expected *= static_cast<std::size_t>(d);
  if (expected != data.size())
    throw std::invalid_argument("checkpoint: shape does not match data size for " +
                                name);
  if (arrays_.find(name) == arrays_.end()) order_.push_back(name);
  arrays_[name] = Entry{std::move(shape), std::move(data)};
}

bool Checkpoint::has_array(const std::string& name) const {
  return arrays_.find(name) != arrays_.end();
}

const std::vector<double>& Checkpoint::array(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end())
    throw std::invalid_argument("checkpoint: missing array " + name);
  return it->second.data;
}

const std::vector<int>& Checkpoint::shape(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end())
    throw std::invalid_argument("checkpoint: missing array " + name);
  return it->second.shape;
}

std::vector<std::string> Checkpoint::array_names() const { return order_; }

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_string(out, meta_json);
  write_pod<std::uint64_t>(out, order_.size());
  for (const auto& name : order_) {
    const Entry& e = arrays_.at(name);
    write_string(out, name);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (const int d : e.shape) write_pod<std::int64_t>(out, d);
    write_pod<std::uint64_t>(out, e.data.size());
    out.write(reinterpret_cast<const char*>(e.data.data()),
              static_cast<std::streamsize>(e.data.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic: " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw IoError("checkpoint: unsupported version: " + path);

  Checkpoint ckpt;
  ckpt.meta_json = read_string(in);
  const auto count = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    const auto rank = read_pod<std::uint32_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::int64_t>(in));
    const auto n = read_pod<std::uint64_t>(in);
    std::vector<double> data(n);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated array data: " + path);
    ckpt.add_array(name, std::move(shape), std::move(data));
  }
  return ckpt;
}

}  // namespace wmlab
