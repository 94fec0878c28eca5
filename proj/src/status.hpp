#pragma once

#include <stdexcept>
#include <string>

namespace crossrank {

// Error classes, kept in sync with crossrank_status in the public C header.
enum class Status {
  Ok = 0,
  InvalidArgument = 1,
  Config = 2,
  Io = 3,
  Parse = 4,
  MissingDependency = 5,
  Numeric = 6,
  Internal = 7,
};

inline const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "ok";
    case Status::InvalidArgument: return "invalid_argument";
    case Status::Config: return "config";
    case Status::Io: return "io";
    case Status::Parse: return "parse";
    case Status::MissingDependency: return "missing_dependency";
    case Status::Numeric: return "numeric";
    case Status::Internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}

  Status status() const { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status status, const std::string& message) {
  throw Error(status, message);
}

}  // namespace crossrank
