#pragma once

#include <stdexcept>

namespace ewc {

// Error categories; the CLI maps them onto exit codes
// (config = 2, data = 3, io = 4, precondition = 5).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ewc
