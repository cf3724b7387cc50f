// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gsm {

// Failure classes map 1:1 to CLI exit codes.
enum class ErrorClass : int { Config = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass cls_;
  std::string name_;
};

#define GSM_ERROR_TYPE(NAME, CLASS)                                          \
  struct NAME : Error {                                                      \
    explicit NAME(const std::string& w = "") : Error(ErrorClass::CLASS, #NAME, w) {} \
  };

GSM_ERROR_TYPE(DegenerateTriangle, Numerical)
GSM_ERROR_TYPE(MissingUV, Data)
GSM_ERROR_TYPE(MissingFrames, Data)
GSM_ERROR_TYPE(OutOfBounds, Data)
GSM_ERROR_TYPE(ShapeMismatch, Data)
GSM_ERROR_TYPE(NonFiniteAttribute, Numerical)
GSM_ERROR_TYPE(MissingForwardState, Config)
GSM_ERROR_TYPE(EmptyMesh, Data)
GSM_ERROR_TYPE(EmptyRegion, Data)
GSM_ERROR_TYPE(AllPruned, Numerical)
GSM_ERROR_TYPE(DivergenceDetected, Numerical)
GSM_ERROR_TYPE(NoSurface, Numerical)
GSM_ERROR_TYPE(OpenBodyMesh, Data)
GSM_ERROR_TYPE(CannotReachTarget, Numerical)
GSM_ERROR_TYPE(PackingOverflow, Numerical)
GSM_ERROR_TYPE(TopologyMismatch, Data)
GSM_ERROR_TYPE(RefinerFailure, Data)
GSM_ERROR_TYPE(ConfigValidation, Config)
GSM_ERROR_TYPE(IoError, Data)

#undef GSM_ERROR_TYPE

}  // namespace gsm
