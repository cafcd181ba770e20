#pragma once

#include <stdexcept>
#include <string>

namespace raw2raw {

// Error categories map 1:1 onto CLI exit codes (see tools/).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetadataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyResultError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace raw2raw
