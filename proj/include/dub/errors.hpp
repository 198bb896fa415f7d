#pragma once

#include <stdexcept>
#include <string>

namespace dub {

// Malformed or inconsistent external data: image files, manifests, checkpoints.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf detected where finite values are required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dub
