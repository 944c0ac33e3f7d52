// Exception types shared by the penny library.
#pragma once

#include <stdexcept>
#include <string>

namespace penny {

/// A precondition on an argument was violated (bad config, invalid params).
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A vector that must be normalized has (numerically) zero length.
///
/// Raised for zero restricted velocities in the data and for a collapsed
/// network head. Callers that can drop the offending sample should do so.
class DegenerateVector : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable file.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace penny
