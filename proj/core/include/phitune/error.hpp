#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phitune {

enum class Errc {
  kBounds,
  kInvalidArgument,
  kProcExceedsCores,
  kUnsupportedGrid,
  kResource,
  kEnvironment,
  kTemplate,
  kParse,
  kIo,
  kConfig,
};

std::string_view to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  Errc code() const noexcept { return code_; }
  // Message without the category prefix, for rethrowing with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace phitune
