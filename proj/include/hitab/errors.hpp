#pragma once

#include <stdexcept>

namespace hitab {

// Malformed or inconsistent caller input (bad dimensions, invalid files, ...).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or failed numerical routines.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem and stream failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hitab
