#pragma once

#include <stdexcept>
#include <string>

namespace rscca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input, mismatched shapes, unreadable files.
class InputError : public Error {
public:
    using Error::Error;
};

/// Singular least squares design without a minimum-norm fallback.
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// Trimmed fit asked for fewer retained observations than parameters.
class InfeasibleTrimError : public Error {
public:
    using Error::Error;
};

/// Zero spread where a positive scale is needed (constant columns, singular covariance).
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

/// Estimator variant cannot run on data of this shape.
class UnsupportedConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rscca
