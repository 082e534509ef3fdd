#ifndef STGAN_ERROR_HPP
#define STGAN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace stgan {

enum class Errc {
  IndexOutOfRange,
  TauTooSmall,
  DomainMismatch,
  EmptyDirectory,
  MixedDimensions,
  UnsupportedBitDepth,
  NonContiguousIndices,
  ShiftTooLarge,
  CropTooLarge,
  InsufficientArea,
  LagTooLarge,
  ConfigMismatch,
  InvalidConfig,
  ShapeError,
  ArityError,
  InputTooSmall,
  NaNLoss,
  VersionMismatch,
  CorruptFile,
  DiskError,
  DirectionMismatch,
  SequenceTooShort,
  FrameTooSmall,
  LengthMismatch,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::TauTooSmall: return "TauTooSmall";
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::EmptyDirectory: return "EmptyDirectory";
    case Errc::MixedDimensions: return "MixedDimensions";
    case Errc::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case Errc::NonContiguousIndices: return "NonContiguousIndices";
    case Errc::ShiftTooLarge: return "ShiftTooLarge";
    case Errc::CropTooLarge: return "CropTooLarge";
    case Errc::InsufficientArea: return "InsufficientArea";
    case Errc::LagTooLarge: return "LagTooLarge";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ShapeError: return "ShapeError";
    case Errc::ArityError: return "ArityError";
    case Errc::InputTooSmall: return "InputTooSmall";
    case Errc::NaNLoss: return "NaNLoss";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::DiskError: return "DiskError";
    case Errc::DirectionMismatch: return "DirectionMismatch";
    case Errc::SequenceTooShort: return "SequenceTooShort";
    case Errc::FrameTooSmall: return "FrameTooSmall";
    case Errc::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` tells
/// callers (and the CLI exit-code mapping) which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace stgan

#endif  // STGAN_ERROR_HPP
