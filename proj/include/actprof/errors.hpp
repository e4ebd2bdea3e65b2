#pragma once

#include <stdexcept>

namespace actprof {

// Exit-code contract of the command line tool:
//   usage_error -> 1, data_error -> 2, numeric_error -> 3.

/// Bad invocation: missing required flags, unknown subcommand, bad flag value.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inadequate input data: file format violations, truncated
/// payloads, out-of-domain labels, empty or too-small samples.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric failure: divergence during training, non-finite intermediate
/// values, degenerate denominators.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace actprof
