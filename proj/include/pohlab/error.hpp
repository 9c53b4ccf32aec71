#pragma once

#include <stdexcept>
#include <string>

namespace pohlab {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kUsage = 2,
  kIo = 3,
  kCodec = 4,
  kCapacity = 5,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Bad argument, precondition violation or grid mismatch.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCode::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

/// Malformed, truncated or otherwise undecodable bitstream.
class CodecError : public Error {
 public:
  explicit CodecError(const std::string& what) : Error(ErrorCode::kCodec, what) {}
};

/// Capacity exceeded or rate infeasible.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(ErrorCode::kCapacity, what) {}
};

}  // namespace pohlab
