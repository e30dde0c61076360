#pragma once

#include <stdexcept>
#include <string>

namespace pricecast {

/// Malformed, missing or insufficient input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model could not be estimated (divergence, non-convergence, invalid fit).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pricecast
