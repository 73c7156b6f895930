#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sushi {

/// Base class of every error raised by the library. The CLI maps
/// InputError subclasses to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

// mesh-core
class NonStarShaped : public Error {
public:
    using Error::Error;
};
class DegenerateFace : public Error {
public:
    using Error::Error;
};
class NonPlanarFace : public Error {
public:
    using Error::Error;
};
class InvalidTopology : public InputError {
public:
    using InputError::InputError;
};

// mesh I/O
class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t line)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public InputError {
public:
    using InputError::InputError;
};

// discrete-space
class MissingRegionMap : public InputError {
public:
    using InputError::InputError;
};
class NoValidCombination : public Error {
public:
    using Error::Error;
};
class MissingWeights : public Error {
public:
    using Error::Error;
};

// assembly
class NonSymmetricTensor : public InputError {
public:
    using InputError::InputError;
};
class NonPositiveTensor : public InputError {
public:
    using InputError::InputError;
};
class SingularAfterElimination : public Error {
public:
    using Error::Error;
};
class InconsistentWeights : public Error {
public:
    using Error::Error;
};

// solver
class MaxIterations : public Error {
public:
    using Error::Error;
};
class BreakdownNonSPD : public Error {
public:
    using Error::Error;
};
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// postproc
class InsufficientLevels : public InputError {
public:
    using InputError::InputError;
};
class RequiresIdentityTensor : public InputError {
public:
    using InputError::InputError;
};
class UnclassifiedBoundaryFace : public Error {
public:
    using Error::Error;
};

} // namespace sushi
