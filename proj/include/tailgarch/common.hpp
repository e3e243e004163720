#pragma once

#include <stdexcept>
#include <string>

namespace tailgarch {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation precondition.
struct invalid_input : error {
  using error::error;
};

/// A configuration object is internally inconsistent (bad fractiles,
/// thresholds out of order, impossible optimizer settings).
struct invalid_config : error {
  using error::error;
};

/// The data are degenerate for the requested computation
/// (constant series, too many zero returns, zero variance).
struct invalid_data : error {
  using error::error;
};

/// The optimizer could not produce a finite, converged solution.
struct optimization_failure : error {
  using error::error;
};

/// A matrix required to be full rank or positive definite is not.
struct numerical_rank_error : error {
  using error::error;
};

/// A test restriction is rank-deficient or otherwise unusable.
struct invalid_restriction : error {
  using error::error;
};

/// A text input (data file, experiment spec) could not be parsed.
struct parse_error : error {
  using error::error;
};

inline constexpr const char* kVersion = "0.1.0";

} // namespace tailgarch
