#pragma once

#include <stdexcept>
#include <string>

namespace anogen {

// Project-wide scalar. Double keeps the numeric kernels verifiable at
// tight tolerances; desk-scale workloads are small enough that the
// bandwidth cost does not matter.
using Scalar = double;

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricUndefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace anogen
