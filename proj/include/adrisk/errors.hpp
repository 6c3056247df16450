#pragma once

#include <stdexcept>
#include <string>

namespace adrisk {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: UsageError -> 1, ConfigError/IngestError -> 2,
// DimensionError/NumericError -> 3.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace adrisk
