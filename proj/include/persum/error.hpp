#pragma once

#include <stdexcept>
#include <string>

namespace persum {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data violates a documented invariant (corpus records, configs, scripts).
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace persum
