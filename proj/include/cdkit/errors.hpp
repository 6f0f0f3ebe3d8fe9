#pragma once

#include <stdexcept>
#include <string>

namespace cdkit {

// Bad run description: unknown keys, out-of-range parameters, malformed files.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Work item exceeds a stated size/memory budget (dense limits, term caps).
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Algorithm failed to reach its numerical contract (non-convergence, NaN).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace cdkit
