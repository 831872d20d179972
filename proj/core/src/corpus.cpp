#include "wmlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "wmlab/dct.hpp"
#include "wmlab/distortions.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/image_io.hpp"
#include "wmlab/rng.hpp"

namespace fs = std::filesystem;

namespace wmlab {
namespace {

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm";
}

// Smooth 0->1 ramp used for soft rectangle edges.
double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Corpus load_corpus(const std::string& directory_path, int target_size) {
  if (target_size < 8)
    throw std::invalid_argument("load_corpus: target_size must be >= 8");
  if (!fs::is_directory(directory_path))
    throw CorpusError("empty corpus: not a directory: " + directory_path);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory_path))
    if (entry.is_regular_file() && has_image_extension(entry.path()))
      files.push_back(entry.path());
  if (files.empty())
    throw CorpusError("empty corpus: no image files in " + directory_path);
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) {
              return a.filename().string() < b.filename().string();
            });

  Corpus corpus;
  for (const auto& file : files) {
    try {
      ImageGrid img = load_image(file.string());
      corpus.images.push_back(clamp01(resize_bilinear(img, target_size)));
      corpus.names.push_back(file.filename().string());
    } catch (const IoError& e) {
      std::cerr << "warning: skipping unreadable image: " << e.what() << "\n";
    }
  }
  if (corpus.images.empty())
    throw CorpusError("empty corpus: no image in " + directory_path + " loaded");
  corpus.train_indices.resize(corpus.images.size());
  for (int i = 0; i < corpus.size(); ++i) corpus.train_indices[i] = i;
  return corpus;
}

Corpus split_corpus(Corpus corpus, double train_fraction, std::uint64_t seed) {
  const int n = corpus.size();
  if (n == 0) throw CorpusError("split_corpus: empty corpus");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_corpus: train_fraction must lie in (0,1)");
  const int k = static_cast<int>(std::llround(train_fraction * n));
  if (k <= 0 || k >= n)
    throw std::invalid_argument(
        "split_corpus: fraction yields an empty train or test set");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "corpus-split"));
  rng.shuffle(order);

  corpus.train_indices.assign(order.begin(), order.begin() + k);
  corpus.test_indices.assign(order.begin() + k, order.end());
  std::sort(corpus.train_indices.begin(), corpus.train_indices.end());
  std::sort(corpus.test_indices.begin(), corpus.test_indices.end());
  corpus.seed = seed;
  return corpus;
}

Corpus make_synthetic_corpus(int count, int size, int channels,
                             std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("make_synthetic_corpus: count <= 0");
  if (size < 8) throw std::invalid_argument("make_synthetic_corpus: size < 8");
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("make_synthetic_corpus: channels must be 1 or 3");

  // Texture recipe, tuned jointly with the spread-spectrum defaults. The
  // watermarking band (DCT rings u+v in [6,20]) must stay quiet enough for
  // reliable correlation decoding, while the low rings carry enough energy
  // to dither block quantization and the rings above the band carry fine
  // grain for realistic local contrast. Layers:
  //   - border-vanishing low-frequency bumps (cosine combinations whose
  //     axis coefficients sum to zero, footprint u,v <= 2),
  //   - a gentle linear gradient,
  //   - interior soft rectangles, band-limited by repeated blurring,
  //   - spectral noise with a power-law low end, a dither floor on rings
  //     6..12, a quiet mid band and grain above ring 20,
  // composed in deviation space and rescaled (never clamped) into range.
  const double pi = 3.14159265358979323846;
  Corpus corpus;
  corpus.seed = seed;
  for (int idx = 0; idx < count; ++idx) {
    Rng rng(derive_seed(seed, "synthetic-image", static_cast<std::uint64_t>(idx)));
    ImageGrid dev(size, size, 1, 0.0);

    const int n_waves = 2 + static_cast<int>(rng.uniform_index(3));
    for (int w = 0; w < n_waves; ++w) {
      double ax[3], ay[3], sx = 0.0, sy = 0.0;
      for (int i = 0; i < 3; ++i) {
        ax[i] = rng.gaussian();
        sx += ax[i];
      }
      for (int i = 0; i < 3; ++i) {
        ay[i] = rng.gaussian();
        sy += ay[i];
      }
      for (int i = 0; i < 3; ++i) {
        ax[i] -= sx / 3.0;
        ay[i] -= sy / 3.0;
      }
      std::vector<double> fx(size), fy(size);
      double peak = 0.0;
      for (int p = 0; p < size; ++p) {
        fx[p] = fy[p] = 0.0;
        for (int i = 0; i < 3; ++i) {
          fx[p] += ax[i] * std::cos(pi * (p + 0.5) * i / size);
          fy[p] += ay[i] * std::cos(pi * (p + 0.5) * i / size);
        }
      }
      for (int p = 0; p < size; ++p)
        peak = std::max({peak, std::abs(fx[p]), std::abs(fy[p])});
      if (peak <= 0.0) continue;
      const double amp = rng.uniform(0.10, 0.22) / (peak * peak) *
                         (rng.bernoulli(0.5) ? 1 : -1);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) dev.at(y, x) += amp * fx[x] * fy[y];
    }

    const double gx = rng.uniform(-0.045, 0.045);
    const double gy = rng.uniform(-0.045, 0.045);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        dev.at(y, x) += gx * (x / (size - 1.0) - 0.5) + gy * (y / (size - 1.0) - 0.5);

    {
      // Slightly rotated so the rectangle edge spectra stay off the DCT
      // axes, where they would otherwise pile onto single band coefficients.
      ImageGrid rects(size, size, 1, 0.0);
      const int n_rects = 1 + static_cast<int>(rng.uniform_index(2));
      for (int r = 0; r < n_rects; ++r) {
        const double hw = rng.uniform(0.1, 0.19) * size;
        const double hh = rng.uniform(0.1, 0.19) * size;
        const double cx = rng.uniform(0.35, 0.65) * size;
        const double cy = rng.uniform(0.35, 0.65) * size;
        const double edge = rng.uniform(1.0, 2.0);
        const double theta = rng.uniform(-0.21, 0.21);  // about +-12 degrees
        const double ct = std::cos(theta), st = std::sin(theta);
        const double contrast =
            rng.uniform(0.14, 0.26) * (rng.bernoulli(0.5) ? 1 : -1);
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x) {
            const double rx = ct * (x - cx) + st * (y - cy);
            const double ry = -st * (x - cx) + ct * (y - cy);
            const double fx = smoothstep((hw - std::abs(rx)) / edge + 0.5);
            if (fx <= 0.0) continue;
            const double fy = smoothstep((hh - std::abs(ry)) / edge + 0.5);
            rects.at(y, x) += contrast * fx * fy;
          }
        }
      }
      const ImageGrid smooth = blur(blur(blur(rects, 3.0), 3.0), 3.0);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) dev.at(y, x) += smooth.at(y, x);
    }

    {
      std::vector<double> coeffs(static_cast<std::size_t>(size) * size, 0.0);
      for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v) {
          const int s = u + v;
          if (s == 0) continue;
          double sigma = 0.15 / std::pow(1.0 + s, 2.1);
          if (s >= 6 && s <= 12) sigma += 0.007;
          else if (s >= 13 && s <= 20) sigma += 0.0025;
          else sigma += 0.027;
          coeffs[static_cast<std::size_t>(u) * size + v] = sigma * rng.gaussian();
        }
      const std::vector<double> noise = DctPlan::cached(size).inverse_2d(coeffs);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          dev.at(y, x) += noise[static_cast<std::size_t>(y) * size + x];
    }

    // Rescale linearly into range; a hard clamp would scatter harmonics
    // into the watermarking band.
    double peak = 0.0;
    for (const double v : dev.data) peak = std::max(peak, std::abs(v));
    const double scale = peak > 0.46 ? 0.46 / peak : 1.0;

    ImageGrid img;
    if (channels == 1) {
      img = ImageGrid(size, size, 1);
      for (std::size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = 0.5 + scale * dev.data[i];
    } else {
      img = ImageGrid(size, size, 3);
      // Gentle low-frequency tint per channel around the shared luminance.
      double tint[3];
      for (double& t : tint) t = rng.uniform(-0.04, 0.04);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const double phase = std::cos(pi * (x + 0.5) / size) *
                               std::cos(pi * (y + 0.5) / size);
          for (int c = 0; c < 3; ++c)
            img.at(y, x, c) =
                0.5 + scale * dev.at(y, x) + tint[c] * 0.5 * (1.0 + phase);
        }
    }
    corpus.images.push_back(clamp01(std::move(img)));
    char name[32];
    std::snprintf(name, sizeof(name), "synthetic_%04d.png", idx);
    corpus.names.emplace_back(name);
  }
  corpus.train_indices.resize(corpus.images.size());
  for (int i = 0; i < corpus.size(); ++i) corpus.train_indices[i] = i;
  return corpus;
}

void write_split_manifest(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write split manifest: " + path);
  out << "[train]\n";
  for (const int i : corpus.train_indices) out << corpus.names[i] << "\n";
  out << "[test]\n";
  for (const int i : corpus.test_indices) out << corpus.names[i] << "\n";
  if (!out) throw IoError("split manifest write failed: " + path);
}

void apply_split_manifest(Corpus& corpus, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read split manifest: " + path);
  std::map<std::string, int> index_of;
  for (int i = 0; i < corpus.size(); ++i) index_of[corpus.names[i]] = i;

  corpus.train_indices.clear();
  corpus.test_indices.clear();
  std::vector<int>* current = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "[train]") {
      current = &corpus.train_indices;
    } else if (line == "[test]") {
      current = &corpus.test_indices;
    } else {
      if (current == nullptr)
        throw CorpusError("split manifest: content before section header");
      const auto it = index_of.find(line);
      if (it == index_of.end())
        throw CorpusError("split manifest names unknown image: " + line);
      current->push_back(it->second);
    }
  }
}

}  // namespace wmlab
