#pragma once

#include <stdexcept>
#include <string>

namespace wmlab {

// Input data problems (empty corpus, malformed image file, ...).
class CorpusError : public std::runtime_error {
public:
  explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Payload does not fit the configured embedding band.
class CapacityError : public std::runtime_error {
public:
  explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

// A trained model failed its post-training quality gate. Signals a
// mis-configuration (too few steps, bad learning rate), not a crash.
class TrainingGateError : public std::runtime_error {
public:
  TrainingGateError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_metric(achieved) {}
  double achieved_metric;
};

}  // namespace wmlab
