// Copyright 2026 The mmpde Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmpde {

/// Error categories. Values are shared with the C API status codes.
enum class ErrorCode : int {
  InvalidArgument = 1,
  SingularMatrix = 2,
  NotSpd = 3,
  DegenerateElement = 4,
  MeshTangled = 5,
  ConvergenceFailure = 6,
  StepUnderflow = 7,
  NonFinite = 8,
  Io = 9,
  BadCallbackShape = 10,
  Internal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by batch_inv and friends; carries the offending batch row.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(std::size_t row, const std::string& what)
      : Error(ErrorCode::SingularMatrix, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Raised when an accepted mesh state would invert an element.
class MeshTangledError : public Error {
 public:
  explicit MeshTangledError(const std::string& what)
      : Error(ErrorCode::MeshTangled,
              what + " (mesh tangling: try a smaller initial time step dt0, e.g. dt0 = 1e-6)") {}
};

inline void require(bool cond, const std::string& msg,
                    ErrorCode code = ErrorCode::InvalidArgument) {
  if (!cond) throw Error(code, msg);
}

}  // namespace mmpde
