#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "amod/demand.hpp"
#include "amod/model.hpp"
#include "amod/plant.hpp"
#include "amod/reference.hpp"
#include "amod/solver.hpp"

namespace amod {

enum class TerminalMode { hard_zero, soft_penalty };

struct MpcConfig {
  int horizon = 8;
  CostKind cost_kind = CostKind::quadratic;
  CostKind reference_kind = CostKind::quadratic;
  TerminalMode terminal_mode = TerminalMode::hard_zero;
  double soft_weight_scale = 1e3;  // x max stage weight
  uint64_t rounding_seed = 0;

  void validate() const;
};

// Stage weights: Q = diag(lambda) on the W block, S = diag(T) on the R
// block, zero elsewhere.
struct Weights {
  Eigen::VectorXd q_state;  // state_dim
  Eigen::VectorXd s_input;  // input_dim
};

Weights make_weights(const LtiModel& model, const Eigen::VectorXd& lambda);

// Finite-horizon program in deviation coordinates around (x_bar, v_bar).
// Decision variables: [dv_0 .. dv_{N-1}; dx_1 .. dx_N; l1 epigraph aux].
// Predicted arrivals equal lambda, so deviation dynamics are
// disturbance-free. Absolute-value constraints: x >= 0, v >= 0,
// V_i <= W_i + lambda (customers arriving during the step are serviceable),
// per-zone dispatch <= idle vehicles.
struct HorizonProgram {
  ConvexProgram program;
  int N = 0, nx = 0, nv = 0;
  bool soft_terminal = false;
  double soft_weight = 0.0;
};

HorizonProgram build_horizon_program(const LtiModel& model,
                                     const EquilibriumReference& ref,
                                     const Eigen::VectorXd& x_now,
                                     const MpcConfig& cfg, double fleet,
                                     bool force_soft_terminal = false);

struct MpcDiagnostics {
  SolveStatus status = SolveStatus::numeric_failure;
  double objective = 0.0;
  double terminal_residual = 0.0;
  bool used_soft_terminal = false;
  bool fallback_zero = false;
  double solve_ms = 0.0;
  int iterations = 0;
};

struct MpcStep {
  FracAction raw;        // v_bar + dv_0, as optimized
  FracAction projected;  // raw projected onto the current true state
  MpcDiagnostics diag;
};

// Receding-horizon controller; owns the solver workspace so the identically
// shaped per-step programs reuse the symbolic factorization.
class MpcController {
 public:
  MpcController(const LtiModel& model, MpcConfig cfg, double fleet);

  void set_reference(EquilibriumReference ref);
  const EquilibriumReference& reference() const { return ref_; }

  MpcStep solve_step(const Eigen::VectorXd& x_now);

 private:
  const LtiModel& model_;
  MpcConfig cfg_;
  double fleet_;
  EquilibriumReference ref_;
  IpmSolver solver_;
};

// One-shot wrapper around MpcController.
MpcStep solve_mpc_step(const LtiModel& model, const EquilibriumReference& ref,
                       const Eigen::VectorXd& x_now, const MpcConfig& cfg,
                       double fleet);

// Clamp a fractional action to the feasible set of the true state:
// 0 <= V <= W, R >= 0, per-zone totals scaled down to P.
FracAction project_action(const FracAction& action, const Eigen::VectorXd& W_now,
                          const Eigen::VectorXd& P_now, const CompleteNetwork& net);

// Round entries up with probability equal to their fractional part, then
// repair per-zone availability: rebalancing entries are decremented first
// (smallest fractional part first), then customer dispatches.
ControlAction randomized_round(const FracAction& action, const SystemState& state,
                               const CompleteNetwork& net, CounterRng& rng);

EquilibriumReference refresh_reference(const DemandScenario& scenario, int step,
                                       const CompleteNetwork& net,
                                       const MpcConfig& cfg, double fleet);

}  // namespace amod
