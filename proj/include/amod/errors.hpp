#pragma once

#include <stdexcept>
#include <string>

namespace amod {

// Base for all typed errors. `code()` is a stable machine-readable tag used
// by the CLI error envelope.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

#define AMOD_DEFINE_ERROR(Name, tag)                       \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& what)                 \
        : Error(tag, what) {}                              \
  }

AMOD_DEFINE_ERROR(NotStronglyConnected, "not_strongly_connected");
AMOD_DEFINE_ERROR(InvalidK, "invalid_k");
AMOD_DEFINE_ERROR(StepOutOfRange, "step_out_of_range");
AMOD_DEFINE_ERROR(InfeasibleAction, "infeasible_action");
AMOD_DEFINE_ERROR(DimensionMismatch, "dimension_mismatch");
AMOD_DEFINE_ERROR(NotBalanced, "not_balanced");
AMOD_DEFINE_ERROR(SolverFailure, "solver_failure");
AMOD_DEFINE_ERROR(InfeasibleHorizon, "infeasible_horizon");
AMOD_DEFINE_ERROR(ConfigError, "config_error");
AMOD_DEFINE_ERROR(MismatchedConfigs, "mismatched_configs");
AMOD_DEFINE_ERROR(IoError, "io_error");

#undef AMOD_DEFINE_ERROR

}  // namespace amod
