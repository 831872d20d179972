#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wmlab/corpus.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/image.hpp"
#include "wmlab/image_io.hpp"
#include "wmlab/rng.hpp"

using namespace wmlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("wmlab_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ImageGrid random_image(int h, int w, int c, std::uint64_t seed) {
  Rng rng(seed);
  ImageGrid img(h, w, c);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("write/read round trip stays within 8-bit quantization") {
  const fs::path dir = temp_dir("io_roundtrip");
  for (const char* name : {"a.png", "a.pgm"}) {
    const ImageGrid img = random_image(32, 32, 1, 11);
    write_image(img, (dir / name).string());
    const ImageGrid back = load_image((dir / name).string());
    REQUIRE(back.same_shape(img));
    double max_diff = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
      max_diff = std::max(max_diff, std::abs(img.data[i] - back.data[i]));
    CHECK(max_diff <= 1.0 / 255.0 + 1e-12);
  }
  // RGB via PNG and PPM.
  for (const char* name : {"c.png", "c.ppm"}) {
    const ImageGrid img = random_image(16, 16, 3, 12);
    write_image(img, (dir / name).string());
    const ImageGrid back = load_image((dir / name).string());
    REQUIRE(back.channels == 3);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
      max_diff = std::max(max_diff, std::abs(img.data[i] - back.data[i]));
    CHECK(max_diff <= 1.0 / 255.0 + 1e-12);
  }
}

TEST_CASE("all-zero image round trips exactly") {
  const fs::path dir = temp_dir("io_zero");
  const ImageGrid zero(16, 16, 1, 0.0);
  write_image(zero, (dir / "z.png").string());
  const ImageGrid back = load_image((dir / "z.png").string());
  for (const double v : back.data) CHECK(v == 0.0);
}

TEST_CASE("second write is byte-identical after first quantization") {
  const fs::path dir = temp_dir("io_idem");
  const ImageGrid img = random_image(24, 24, 1, 13);
  write_image(img, (dir / "first.png").string());
  const ImageGrid once = load_image((dir / "first.png").string());
  write_image(once, (dir / "second.png").string());
  CHECK(file_bytes(dir / "first.png") == file_bytes(dir / "second.png"));
}

TEST_CASE("unwritable path raises IoError") {
  const ImageGrid img(8, 8, 1, 0.5);
  CHECK_THROWS_AS(write_image(img, "/nonexistent_dir_xyz/a.png"), IoError);
  CHECK_THROWS_AS(write_image(img, "/tmp/bad_extension.xyz"), IoError);
}

TEST_CASE("bilinear resize of a constant image is constant") {
  ImageGrid small(2, 2, 1, 1.0);
  const ImageGrid up = resize_bilinear(small, 32);
  REQUIRE(up.height == 32);
  for (const double v : up.data) CHECK(v == doctest::Approx(1.0).epsilon(0));

  // And through the PNG path, as in the 2x2 all-white example.
  const fs::path dir = temp_dir("io_white");
  write_image(small, (dir / "w.png").string());
  Corpus corpus = load_corpus(dir.string(), 32);
  REQUIRE(corpus.size() == 1);
  for (const double v : corpus.images[0].data) CHECK(v == 1.0);
}

TEST_CASE("resize identity and downsample shape") {
  const ImageGrid img = random_image(32, 32, 1, 14);
  const ImageGrid same = resize_bilinear(img, 32);
  CHECK(same.data == img.data);
  const ImageGrid down = resize_bilinear(img, 16);
  CHECK(down.height == 16);
  CHECK(down.width == 16);
}

TEST_CASE("load_corpus is deterministic and lexicographically ordered") {
  const fs::path dir = temp_dir("corpus_det");
  for (const char* name : {"b.png", "a.png", "c.pgm"})
    write_image(random_image(16, 16, 1, name[0]), (dir / name).string());
  const Corpus c1 = load_corpus(dir.string(), 32);
  const Corpus c2 = load_corpus(dir.string(), 32);
  REQUIRE(c1.size() == 3);
  CHECK(c1.names == std::vector<std::string>{"a.png", "b.png", "c.pgm"});
  for (int i = 0; i < 3; ++i) CHECK(c1.images[i].data == c2.images[i].data);
}

TEST_CASE("empty or unreadable corpora raise the right errors") {
  const fs::path dir = temp_dir("corpus_empty");
  CHECK_THROWS_AS(load_corpus(dir.string(), 32), CorpusError);
  CHECK_THROWS_AS(load_corpus("/nonexistent_dir_xyz", 32), CorpusError);

  // A corrupt file among good ones is skipped with a warning.
  write_image(random_image(16, 16, 1, 1), (dir / "good.png").string());
  std::ofstream bad(dir / "bad.png", std::ios::binary);
  bad << "not a png";
  bad.close();
  const Corpus c = load_corpus(dir.string(), 32);
  CHECK(c.size() == 1);

  // Only unreadable files -> empty corpus error.
  const fs::path dir2 = temp_dir("corpus_badonly");
  std::ofstream bad2(dir2 / "bad.png", std::ios::binary);
  bad2 << "nope";
  bad2.close();
  CHECK_THROWS_AS(load_corpus(dir2.string(), 32), CorpusError);
}

TEST_CASE("split_corpus: sizes, determinism, disjoint cover") {
  Corpus corpus = make_synthetic_corpus(10, 32, 1, 5);
  const Corpus s1 = split_corpus(corpus, 0.8, 99);
  CHECK(s1.train_indices.size() == 8);
  CHECK(s1.test_indices.size() == 2);

  const Corpus s2 = split_corpus(corpus, 0.8, 99);
  CHECK(s1.train_indices == s2.train_indices);
  CHECK(s1.test_indices == s2.test_indices);

  const Corpus s3 = split_corpus(corpus, 0.8, 100);
  CHECK(s1.train_indices != s3.train_indices);

  // Both partitions are disjoint covers; sharing the seed makes the
  // smaller-fraction train set a subset of the larger one and the test
  // sets nested the other way (the shuffle is shared).
  const Corpus s4 = split_corpus(corpus, 0.2, 99);
  CHECK(s4.train_indices.size() == 2);
  auto covers = [&](const Corpus& s) {
    std::vector<bool> seen(10, false);
    for (int i : s.train_indices) {
      REQUIRE(!seen[i]);
      seen[i] = true;
    }
    for (int i : s.test_indices) {
      REQUIRE(!seen[i]);
      seen[i] = true;
    }
    for (bool b : seen) CHECK(b);
  };
  covers(s1);
  covers(s4);
  for (int i : s4.train_indices)
    CHECK(std::find(s1.train_indices.begin(), s1.train_indices.end(), i) !=
          s1.train_indices.end());
  for (int i : s1.test_indices)
    CHECK(std::find(s4.test_indices.begin(), s4.test_indices.end(), i) !=
          s4.test_indices.end());
}

TEST_CASE("split_corpus rejects degenerate fractions") {
  Corpus corpus = make_synthetic_corpus(10, 32, 1, 5);
  CHECK_THROWS_AS(split_corpus(corpus, 0.01, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(corpus, 0.999, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_corpus(corpus, 1.5, 1), std::invalid_argument);
}

TEST_CASE("synthetic corpus is deterministic, valid and textured") {
  const Corpus a = make_synthetic_corpus(8, 32, 1, 7);
  const Corpus b = make_synthetic_corpus(8, 32, 1, 7);
  REQUIRE(a.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(a.images[i].data == b.images[i].data);
    CHECK(image_is_valid(a.images[i]));
    // Non-degenerate texture.
    double lo = 1.0, hi = 0.0;
    for (const double v : a.images[i].data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo > 0.05);
  }
  const Corpus rgb = make_synthetic_corpus(2, 32, 3, 7);
  CHECK(rgb.images[0].channels == 3);
  CHECK(image_is_valid(rgb.images[0]));
}

TEST_CASE("split manifest round trips") {
  const fs::path dir = temp_dir("manifest");
  Corpus corpus = split_corpus(make_synthetic_corpus(10, 32, 1, 3), 0.7, 5);
  write_split_manifest(corpus, (dir / "split.txt").string());

  Corpus fresh = make_synthetic_corpus(10, 32, 1, 3);
  apply_split_manifest(fresh, (dir / "split.txt").string());
  CHECK(fresh.train_indices == corpus.train_indices);
  CHECK(fresh.test_indices == corpus.test_indices);
}

TEST_CASE("luminance round trip preserves chroma") {
  const ImageGrid rgb = random_image(16, 16, 3, 20);
  const ImageGrid y = luminance(rgb);
  const ImageGrid back = replace_luminance(rgb, y);
  for (std::size_t i = 0; i < rgb.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(rgb.data[i]).epsilon(1e-12));
}
