#pragma once

#include <stdexcept>
#include <string>

namespace sscope {

// Error families. Callers (the CLI in particular) map these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct ModelError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(const std::string& msg, int line, std::string field)
      : Error("line " + std::to_string(line) + (field.empty() ? "" : " [" + field + "]") + ": " + msg),
        line(line), field(std::move(field)) {}
  int line;
  std::string field;
};

}  // namespace sscope
