#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sedic {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An Error carrying a module-specific code. Each module defines an enum and a
// `to_string(Code)` overload next to it.
template <typename Code>
class CodedError : public Error {
 public:
  CodedError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace sedic
