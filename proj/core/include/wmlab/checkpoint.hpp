#pragma once

#include <map>
#include <string>
#include <vector>

namespace wmlab {

// Self-describing binary container for model checkpoints: a JSON metadata
// blob (config, seeds) plus named flat double arrays with shape metadata.
// Loading reproduces inference bit-exactly on the same hardware; the file
// layout is byte-stable for identical contents.
class Checkpoint {
public:
  std::string meta_json = "{}";

  void add_array(const std::string& name, std::vector<int> shape,
                 std::vector<double> data);
  bool has_array(const std::string& name) const;
  const std::vector<double>& array(const std::string& name) const;
  const std::vector<int>& shape(const std::string& name) const;
  std::vector<std::string> array_names() const;  // insertion order

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

private:
  struct Entry {
    std::vector<int> shape;
    std::vector<double> data;
  };
  std::vector<std::string> order_;
  std::map<std::string, Entry> arrays_;
};

}  // namespace wmlab
