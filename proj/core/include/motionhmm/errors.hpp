#pragma once

#include <stdexcept>
#include <string>

namespace motionhmm {

// Failure to read or write an artifact (missing file, unwritable path, ...).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input: bad schema, bad config, invalid model.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what)
      : std::runtime_error(what) {}
};

// Numerical failure while fitting a model.
class training_error : public std::runtime_error {
 public:
  explicit training_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace motionhmm
