#pragma once

#include <stdexcept>
#include <string>

namespace bytegan {

enum class Errc {
  MalformedArchive,
  NoMatchingEntry,
  EmptyStream,
  IoFailure,
  FormatViolation,
  ConfigError,
  InsufficientSamples,
  ShapeMismatch,
  NumericalFault,
  NotScalar,
  Disconnected,
  SizeMismatch,
  TooFewSamples,
  NotSymmetric,
  IndefiniteMatrix,
  DimensionMismatch,
  ScheduleTooSmall,
  LengthMismatch,
  EmptyPool,
  DataExhausted,
  UnmatchedCells,
};

const char* errc_name(Errc c);

// Single exception type carrying a spec error code; call sites match on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedArchive: return "MalformedArchive";
    case Errc::NoMatchingEntry: return "NoMatchingEntry";
    case Errc::EmptyStream: return "EmptyStream";
    case Errc::IoFailure: return "IoFailure";
    case Errc::FormatViolation: return "FormatViolation";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NumericalFault: return "NumericalFault";
    case Errc::NotScalar: return "NotScalar";
    case Errc::Disconnected: return "Disconnected";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::IndefiniteMatrix: return "IndefiniteMatrix";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ScheduleTooSmall: return "ScheduleTooSmall";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::DataExhausted: return "DataExhausted";
    case Errc::UnmatchedCells: return "UnmatchedCells";
  }
  return "UnknownError";
}

}  // namespace bytegan
