#pragma once

#include <Eigen/Dense>

#include "amod/network.hpp"
#include "amod/plant.hpp"
#include "amod/solver.hpp"

namespace amod {

// Improved adaptive real-time rebalancing: a single-step LP solved from the
// current state with objective T'R - lambda'U.
//
// U is capped at max(W, lambda) (the printed program is unbounded above in
// U), which makes V = min(W, U) affine in U: V_k = U_k where W_k >= lambda_k
// and V_k = W_k otherwise. The availability constraint credits the current
// dispatches through the first-order lag inflow,
//   E_out(V + R) <= P + E_in T^-1 (F + V + R),
// because with the raw right-hand side P + E_in T^-1 F the LP never
// rebalances (R only adds cost and consumes availability). An elastic slack
// with a large penalty keeps the LP feasible from states that cannot
// sustain the dispatch floor U >= lambda.
struct IarrAction {
  Eigen::VectorXd R, U, V;
  Eigen::VectorXd v_avail;  // service level charged against availability
  double overdraft = 0.0;   // max availability slack used by the LP
  double objective = 0.0;   // T'R - lambda'U part only
};

IarrAction solve_iarr_step(const CompleteNetwork& net, const SystemState& state,
                           const Eigen::VectorXd& lambda, IpmSolver& solver);

// Guaranteed-feasible point: R = 0, U = lambda, V = min(W, lambda), nothing
// charged against availability.
IarrAction iarr_feasible_fallback(const SystemState& state,
                                  const Eigen::VectorXd& lambda);

// Max constraint violation of an action against the step LP's constraint
// set (availability evaluated at v_avail, no slack).
double iarr_feasibility_residual(const CompleteNetwork& net,
                                 const SystemState& state,
                                 const Eigen::VectorXd& lambda,
                                 const IarrAction& action);

}  // namespace amod
