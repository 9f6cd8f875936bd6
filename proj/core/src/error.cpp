#include "phitune/error.hpp"

namespace phitune {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::kBounds: return "bounds error";
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kProcExceedsCores: return "process count exceeds cores";
    case Errc::kUnsupportedGrid: return "unsupported grid";
    case Errc::kResource: return "resource error";
    case Errc::kEnvironment: return "environment error";
    case Errc::kTemplate: return "template error";
    case Errc::kParse: return "parse error";
    case Errc::kIo: return "I/O error";
    case Errc::kConfig: return "configuration error";
  }
  return "error";
}

}  // namespace phitune
