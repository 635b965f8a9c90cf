#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace readscale {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument value (alpha outside (0,1), k < 1, z outside (0,100), ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(std::vector<std::string> ids);
    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

/// Nothing left to fit once the zero policy has been applied.
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

class UnsupportedSizeError : public Error {
public:
    using Error::Error;
};

/// Rescaling a group whose mean is zero.
class AllUnreadGroupError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Provider unreachable after exhausting retries.
class FetchError : public Error {
public:
    using Error::Error;
};

}  // namespace readscale
