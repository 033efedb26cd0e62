#pragma once

#include <stdexcept>
#include <string>

namespace dmg {

/// Base class for all library errors. Thrown only for contract violations
/// and unusable inputs; expected per-trial outcomes (missed grasps, horizon
/// exhaustion, out-of-chart goals) are recorded results, never exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A task spec or DMP configuration failed validation.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// A demonstration is too short to fit (fewer than 3 samples per segment).
class TooShortError : public Error {
 public:
  using Error::Error;
};

/// Every basis weight would be degenerate: |g - y0| below the amplitude
/// floor while a nonzero forcing profile was requested in strict mode.
class DegenerateAmplitudeError : public Error {
 public:
  using Error::Error;
};

/// A segment's orientation track leaves the axis-angle chart (rotation
/// from the segment-start orientation exceeds the injectivity radius), or
/// consecutive samples jump too far to disambiguate.
class ChartRangeError : public Error {
 public:
  using Error::Error;
};

/// A subtask's completion predicate never fires in the demonstration.
class PredicateNeverFiresError : public Error {
 public:
  PredicateNeverFiresError(int subtask_index, const std::string& what)
      : Error(what), subtask_index(subtask_index) {}
  int subtask_index = -1;
};

/// Completion predicates fire out of subtask order (predicate i+1 at or
/// before predicate i, or the first predicate already true at step 0).
class OutOfOrderError : public Error {
 public:
  using Error::Error;
};

/// Manually supplied segment boundaries are malformed.
class InvalidBoundaryError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling could not place objects without overlap.
class CrowdedSceneError : public Error {
 public:
  using Error::Error;
};

/// A simulation step was requested past the task horizon.
class HorizonExceededError : public Error {
 public:
  using Error::Error;
};

/// A predicate name in a task spec is not recognized.
class UnknownPredicateError : public SpecError {
 public:
  using SpecError::SpecError;
};

/// File-level I/O failure (open/read/write, bad magic, malformed layout).
class IoError : public Error {
 public:
  using Error::Error;
};

/// The file's schema version is not supported by this build.
class SchemaVersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

/// A block checksum does not match its payload.
class ChecksumMismatchError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace dmg
