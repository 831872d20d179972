#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wmlab/checkpoint.hpp"
#include "wmlab/errors.hpp"
#include "wmlab/rng.hpp"

using namespace wmlab;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trips arrays and metadata bit-exactly") {
  const fs::path path = fs::temp_directory_path() / "wmlab_ckpt_test.ckpt";
  Checkpoint ckpt;
  ckpt.meta_json = R"({"kind":"test","seed":42})";
  Rng rng(1);
  std::vector<double> a(100), b(6);
  for (double& v : a) v = rng.gaussian();
  for (double& v : b) v = rng.gaussian();
  ckpt.add_array("layer.w", {10, 10}, a);
  ckpt.add_array("layer.b", {6}, b);
  ckpt.save(path.string());

  const Checkpoint back = Checkpoint::load(path.string());
  CHECK(back.meta_json == ckpt.meta_json);
  CHECK(back.array_names() == std::vector<std::string>{"layer.w", "layer.b"});
  CHECK(back.array("layer.w") == a);  // bit-exact doubles
  CHECK(back.array("layer.b") == b);
  CHECK(back.shape("layer.w") == std::vector<int>{10, 10});

  // Saving the loaded checkpoint reproduces the same bytes.
  const fs::path path2 = fs::temp_directory_path() / "wmlab_ckpt_test2.ckpt";
  back.save(path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("checkpoint validation errors") {
  Checkpoint ckpt;
  CHECK_THROWS_AS(ckpt.add_array("x", {3}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(ckpt.array("missing"), std::invalid_argument);
  CHECK_THROWS_AS(Checkpoint::load("/nonexistent_xyz.ckpt"), IoError);

  const fs::path bad = fs::temp_directory_path() / "wmlab_bad.ckpt";
  std::ofstream out(bad, std::ios::binary);
  out << "JUNKJUNKJUNK";
  out.close();
  CHECK_THROWS_AS(Checkpoint::load(bad.string()), IoError);
}
