#pragma once

#include <stdexcept>
#include <string>

namespace shearflame {

enum class ErrorKind {
  kInvalidArgument,
  kNonFinite,
  kConfig,
  kDivergence,
  kNoSignChange,
  kIo,
};

/// Base exception for every failure raised by the library. The kind lets
/// the CLI map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace shearflame
