#pragma once

#include <stdexcept>
#include <string>

namespace drk {

// Error taxonomy shared by the whole library. The CLI maps ShapeError,
// ValueError and IoError to exit code 1 (misuse / bad input) and
// NumericError to exit code 2 (numeric regression).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ValueError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

}  // namespace drk
