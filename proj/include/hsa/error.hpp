#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hsa {

enum class Errc {
  InvalidArgument,
  UnknownDesignPoint,
  ThetaOutOfRange,
  LengthUnreachable,
  DegenerateCoupling,
  NoCyclesFound,
  InsufficientCycles,
  DegenerateDesignMatrix,
  LengthMismatch,
  NoForceMinimum,
  NonPositiveInput,
  NonDecreasingSeries,
  FitDivergence,
  ModeUnsupported,
  EmptyCatalog,
  NoFeasibleDesign,
  UnknownDesign,
  MalformedHeader,
  NonMonotoneTime,
  UnparseableRow,
  MalformedTable,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UnknownDesignPoint: return "UnknownDesignPoint";
    case Errc::ThetaOutOfRange: return "ThetaOutOfRange";
    case Errc::LengthUnreachable: return "LengthUnreachable";
    case Errc::DegenerateCoupling: return "DegenerateCoupling";
    case Errc::NoCyclesFound: return "NoCyclesFound";
    case Errc::InsufficientCycles: return "InsufficientCycles";
    case Errc::DegenerateDesignMatrix: return "DegenerateDesignMatrix";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NoForceMinimum: return "NoForceMinimum";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::NonDecreasingSeries: return "NonDecreasingSeries";
    case Errc::FitDivergence: return "FitDivergence";
    case Errc::ModeUnsupported: return "ModeUnsupported";
    case Errc::EmptyCatalog: return "EmptyCatalog";
    case Errc::NoFeasibleDesign: return "NoFeasibleDesign";
    case Errc::UnknownDesign: return "UnknownDesign";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::NonMonotoneTime: return "NonMonotoneTime";
    case Errc::UnparseableRow: return "UnparseableRow";
    case Errc::MalformedTable: return "MalformedTable";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an hsa::Error carrying a
/// machine-checkable code. Parse errors also carry the 1-based line number.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        line_(line) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

/// Short form of a number for error messages.
inline std::string message_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Process exit status for the command-line tool: 1 for domain outcomes
/// (infeasible, unfittable, out of range), 2 for input/format/IO problems.
constexpr int exit_status(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::UnknownDesign:
    case Errc::MalformedHeader:
    case Errc::NonMonotoneTime:
    case Errc::UnparseableRow:
    case Errc::MalformedTable:
    case Errc::Io:
    case Errc::LengthMismatch:
    case Errc::EmptyCatalog:
      return 2;
    default:
      return 1;
  }
}

}  // namespace hsa
