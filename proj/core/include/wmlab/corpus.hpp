#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmlab/image.hpp"

namespace wmlab {

// Ordered image collection with a deterministic train/test partition.
// Identical (images, seed) always produce identical splits.
struct Corpus {
  std::vector<ImageGrid> images;
  std::vector<std::string> names;  // one label per image, parallel to images
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(images.size()); }
  const ImageGrid& train_image(int i) const { return images[train_indices[i]]; }
  const ImageGrid& test_image(int i) const { return images[test_indices[i]]; }
};

// Loads every readable PNG/PGM/PPM in a directory (lexicographic filename
// order), resizes to target_size x target_size (bilinear, corner aligned)
// and normalizes to [0,1]. Unreadable files are skipped with a warning on
// stderr; throws CorpusError only when the directory is empty ("empty
// corpus") or no image loads at all.
Corpus load_corpus(const std::string& directory_path, int target_size);

// Seeded shuffle + partition; round(train_fraction * n) images go to train.
// Throws std::invalid_argument when either side of the split would be empty.
Corpus split_corpus(Corpus corpus, double train_fraction, std::uint64_t seed);

// Built-in texture generator so the laboratory runs with zero external
// data: low-order cosine background + band-limited noise + soft-edged
// random rectangles, fully determined by (count, size, channels, seed).
Corpus make_synthetic_corpus(int count, int size, int channels, std::uint64_t seed);

// Persists/reads the split as a text manifest listing filenames per split.
void write_split_manifest(const Corpus& corpus, const std::string& path);
// Applies a manifest to a corpus loaded from the same directory contents.
void apply_split_manifest(Corpus& corpus, const std::string& path);

}  // namespace wmlab
