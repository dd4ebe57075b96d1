#pragma once

#include <stdexcept>
#include <string>

namespace hierport {

/// Broad failure class, mapped onto CLI exit codes by the tools.
enum class ErrorKind {
  invalid_argument,  // caller supplied inconsistent or out-of-range input
  data,              // input files are missing, unreadable or malformed
  config,            // run configuration failed validation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

[[noreturn]] inline void invalid(const std::string& what) { throw Error(ErrorKind::invalid_argument, what); }

}  // namespace hierport
