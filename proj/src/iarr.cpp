#include "amod/iarr.hpp"

#include <vector>

#include "amod/errors.hpp"

namespace amod {

namespace {

// V = vcoef .* U + vconst is min(W, U) on the capped box lambda <= U <= max(W, lambda).
void min_substitution(const SystemState& state, const Eigen::VectorXd& lambda,
                      Eigen::VectorXd& vcoef, Eigen::VectorXd& vconst) {
  const int m = static_cast<int>(lambda.size());
  vcoef.resize(m);
  vconst.resize(m);
  for (int k = 0; k < m; ++k) {
    if (static_cast<double>(state.W[k]) >= lambda[k]) {
      vcoef[k] = 1.0;
      vconst[k] = 0.0;
    } else {
      vcoef[k] = 0.0;
      vconst[k] = state.W[k];
    }
  }
}

}  // namespace

IarrAction solve_iarr_step(const CompleteNetwork& net, const SystemState& state,
                           const Eigen::VectorXd& lambda, IpmSolver& solver) {
  const int n = net.n, m = net.m;
  if (lambda.size() != m || state.W.size() != m || state.P.size() != n)
    throw DimensionMismatch("iarr input sizes");

  Eigen::VectorXd vcoef, vconst;
  min_substitution(state, lambda, vcoef, vconst);
  const Eigen::VectorXd tvec = net.T.cast<double>();
  const Eigen::VectorXd wvec = state.W.cast<double>();
  const Eigen::VectorXd cap = wvec.cwiseMax(lambda);
  const double penalty = 1e6 * (1.0 + lambda.maxCoeff());

  // Variables: [R (m); U (m); slack (n)]
  ConvexProgram pr;
  pr.num_vars = 2 * m + n;
  pr.linear.setZero(pr.num_vars);
  pr.linear.head(m) = tvec;
  pr.linear.segment(m, m) = -lambda;
  pr.linear.tail(n).setConstant(penalty);
  constexpr double inf = std::numeric_limits<double>::infinity();
  pr.lower.setZero(pr.num_vars);
  pr.lower.segment(m, m) = lambda;
  pr.upper = Eigen::VectorXd::Constant(pr.num_vars, inf);
  pr.upper.segment(m, m) = cap;

  // Availability per zone with the lag-credited inflow:
  //   sum_out (V + R) - sum_in (V + R)/T - slack_r <= P_r + sum_in F/T
  std::vector<Eigen::Triplet<double>> gt;
  Eigen::VectorXd gh(n);
  for (int r = 0; r < n; ++r) gh[r] = state.P[r];
  for (int k = 0; k < m; ++k) {
    auto [orig, dest] = net.link_pair(k);
    double tinv = 1.0 / net.T[k];
    gt.emplace_back(orig, k, 1.0);         // R out
    gt.emplace_back(dest, k, -tinv);       // R credit in
    if (vcoef[k] != 0.0) {
      gt.emplace_back(orig, m + k, vcoef[k]);
      gt.emplace_back(dest, m + k, -vcoef[k] * tinv);
    }
    gh[orig] -= vconst[k];
    gh[dest] += vconst[k] * tinv;
    gh[dest] += state.F[k] * tinv;
  }
  for (int r = 0; r < n; ++r) gt.emplace_back(r, 2 * m + r, -1.0);
  pr.ineq_mat.resize(n, pr.num_vars);
  pr.ineq_mat.setFromTriplets(gt.begin(), gt.end());
  pr.ineq_rhs = gh;

  Solution sol = solver.solve(pr);
  if (sol.status != SolveStatus::optimal)
    throw SolverFailure(std::string("iarr LP: ") + to_string(sol.status));

  IarrAction act;
  act.R = sol.x.head(m).cwiseMax(0.0);
  act.U = sol.x.segment(m, m).cwiseMax(lambda).cwiseMin(cap);
  act.V = wvec.cwiseMin(act.U);
  act.v_avail = vcoef.cwiseProduct(act.U) + vconst;
  act.overdraft = sol.x.tail(n).maxCoeff();
  act.objective = tvec.dot(act.R) - lambda.dot(act.U);
  return act;
}

IarrAction iarr_feasible_fallback(const SystemState& state,
                                  const Eigen::VectorXd& lambda) {
  IarrAction act;
  const int m = static_cast<int>(lambda.size());
  act.R = Eigen::VectorXd::Zero(m);
  act.U = lambda;
  act.V = state.W.cast<double>().cwiseMin(lambda);
  act.v_avail = Eigen::VectorXd::Zero(m);
  act.overdraft = 0.0;
  act.objective = -lambda.dot(lambda);
  return act;
}

double iarr_feasibility_residual(const CompleteNetwork& net,
                                 const SystemState& state,
                                 const Eigen::VectorXd& lambda,
                                 const IarrAction& action) {
  const int n = net.n, m = net.m;
  const Eigen::VectorXd wvec = state.W.cast<double>();
  const Eigen::VectorXd cap = wvec.cwiseMax(lambda);
  double res = 0.0;
  for (int k = 0; k < m; ++k) {
    res = std::max(res, -action.R[k]);
    res = std::max(res, lambda[k] - action.U[k]);
    res = std::max(res, action.U[k] - cap[k]);
    res = std::max(res, -action.v_avail[k]);
    res = std::max(res, action.v_avail[k] - wvec[k]);
    res = std::max(res, action.v_avail[k] - action.U[k]);
  }
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < m; ++k) {
    auto [orig, dest] = net.link_pair(k);
    double flow = action.v_avail[k] + action.R[k];
    lhs[orig] += flow;
    lhs[dest] -= (state.F[k] + flow) / net.T[k];
  }
  for (int r = 0; r < n; ++r) res = std::max(res, lhs[r] - state.P[r]);
  return res;
}

}  // namespace amod
