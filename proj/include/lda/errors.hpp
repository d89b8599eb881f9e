#pragma once

#include <stdexcept>
#include <string>

namespace lda {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text input (bad token, wrong field count). Messages carry the
// 1-based line number of the offending line.
struct ParseError : Error {
  using Error::Error;
};

// A well-formed value that violates a declared bound (doc/word id outside
// the header-declared range, topic id >= K, ...).
struct RangeError : Error {
  using Error::Error;
};

// Invalid argument to an operation (nonpositive hyperparameter, fraction
// outside [0,1), unknown kernel name, ...).
struct ValueError : Error {
  using Error::Error;
};

// Filesystem-level failure (open/read/write/rename). Message names the path.
struct IoError : Error {
  using Error::Error;
};

// Binary payload with a bad magic or unsupported version.
struct FormatError : Error {
  using Error::Error;
};

// Binary payload shorter than its own header declares.
struct TruncationError : Error {
  using Error::Error;
};

// Binary payload that decodes but is structurally invalid (unsorted entries,
// zero deltas, ids out of range).
struct CorruptionError : Error {
  using Error::Error;
};

// A value that does not fit the wire format it must be written in.
struct CapacityError : Error {
  using Error::Error;
};

// Worker-local state is provably corrupt (negative document-topic count).
struct StateError : Error {
  using Error::Error;
};

}  // namespace lda
