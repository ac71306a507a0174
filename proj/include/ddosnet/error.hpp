#pragma once

#include <stdexcept>
#include <string>

namespace ddosnet {

// Malformed or unusable input data (CSV contents, model files, shapes).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not line up.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ddosnet
