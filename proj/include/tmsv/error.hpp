#pragma once

#include <stdexcept>
#include <string>

namespace tmsv {

/// Parameter outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Visibility requested for an input whose reference correlation vanishes.
class UndefinedVisibility : public DomainError {
public:
    using DomainError::DomainError;
};

/// An estimator could not produce a result; `what()` carries diagnostics.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid external input (files, configuration).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tmsv
