#pragma once

#include "npe/core/errors.hpp"

namespace npe::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitValidation = 4;

/// Unreadable inputs (checkpoints, dataset files) count as configuration errors.
inline int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::config:
    case ErrorClass::io: return kExitConfig;
    case ErrorClass::numeric: return kExitNumeric;
    case ErrorClass::validation: return kExitValidation;
  }
  return kExitConfig;
}

}  // namespace npe::harness
