// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eevi {

enum class ErrorCode {
  incomplete_assignment,
  invalid_selection,
  capability_missing,
  non_real_variables,
  insufficient_training_data,
  all_weights_zero,
  zero_density_conditioning_point,
  particle_collapse,
  backward_kernel_unavailable,
  nonpositive_stddev,
  too_large_to_enumerate,
  singular_submatrix,
  index_out_of_horizon,
  sharing_mode_mismatch,
  degenerate_sample,
  invalid_argument,
  model_load,
  config,
};

inline constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::incomplete_assignment: return "IncompleteAssignment";
    case ErrorCode::invalid_selection: return "InvalidSelection";
    case ErrorCode::capability_missing: return "CapabilityMissing";
    case ErrorCode::non_real_variables: return "NonRealVariables";
    case ErrorCode::insufficient_training_data: return "InsufficientTrainingData";
    case ErrorCode::all_weights_zero: return "AllWeightsZero";
    case ErrorCode::zero_density_conditioning_point:
      return "ZeroDensityConditioningPoint";
    case ErrorCode::particle_collapse: return "ParticleCollapse";
    case ErrorCode::backward_kernel_unavailable:
      return "BackwardKernelUnavailable";
    case ErrorCode::nonpositive_stddev: return "NonpositiveStddev";
    case ErrorCode::too_large_to_enumerate: return "TooLargeToEnumerate";
    case ErrorCode::singular_submatrix: return "SingularSubmatrix";
    case ErrorCode::index_out_of_horizon: return "IndexOutOfHorizon";
    case ErrorCode::sharing_mode_mismatch: return "SharingModeMismatch";
    case ErrorCode::degenerate_sample: return "DegenerateSample";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::model_load: return "ModelLoadError";
    case ErrorCode::config: return "ConfigError";
  }
  return "Unknown";
}

// Every failure in the library is reported through this type; the code lets
// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
  if (!cond) fail(code, message);
}

}  // namespace eevi
