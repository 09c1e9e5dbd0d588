#include "spectraprune/error.hpp"

namespace spectraprune {

const char* to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::kBadMagic: return "bad magic";
    case ParseErrorKind::kUnsupportedVersion: return "unsupported version";
    case ParseErrorKind::kBadHeader: return "malformed header";
    case ParseErrorKind::kUnsupportedDtype: return "unsupported dtype";
    case ParseErrorKind::kFortranOrder: return "fortran_order unsupported";
    case ParseErrorKind::kBadShape: return "unsupported shape";
    case ParseErrorKind::kTruncatedPayload: return "truncated payload";
    case ParseErrorKind::kNonFiniteValue: return "non-finite value";
  }
  return "parse error";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, const std::string& detail)
    : Error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) +
            (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      offset_(offset),
      detail_(detail) {}

}  // namespace spectraprune
