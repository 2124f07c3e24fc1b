#include "amod/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <vector>

#include "amod/errors.hpp"

namespace amod {

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (terminal_mode == TerminalMode::soft_penalty && !(soft_weight_scale > 0.0))
    throw ConfigError("soft terminal weight must be positive");
}

Weights make_weights(const LtiModel& model, const Eigen::VectorXd& lambda) {
  if (lambda.size() != model.m) throw DimensionMismatch("lambda size != links");
  Weights w;
  w.q_state = Eigen::VectorXd::Zero(model.state_dim());
  w.q_state.head(model.m) = lambda;
  w.s_input = Eigen::VectorXd::Zero(model.input_dim());
  w.s_input.tail(model.m) = model.T.cast<double>();
  return w;
}

namespace {

// Per-zone outflow sums of a stacked (V, R) input vector.
Eigen::VectorXd zone_outflow(int n, const Eigen::VectorXd& v) {
  const int m = n * (n - 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < m; ++k) {
    int r = k / (n - 1);
    out[r] += v[k] + v[m + k];
  }
  return out;
}

}  // namespace

HorizonProgram build_horizon_program(const LtiModel& model,
                                     const EquilibriumReference& ref,
                                     const Eigen::VectorXd& x_now,
                                     const MpcConfig& cfg, double fleet,
                                     bool force_soft_terminal) {
  cfg.validate();
  (void)fleet;  // the reference already carries the slack split of the fleet
  const int nx = model.state_dim(), nv = model.input_dim();
  const int n = model.n, m = model.m;
  if (x_now.size() != nx) throw DimensionMismatch("x_now size != state dim");
  if (!x_now.allFinite()) throw ConfigError("x_now must be finite");
  const int N = cfg.horizon;

  HorizonProgram hp;
  hp.N = N;
  hp.nx = nx;
  hp.nv = nv;
  hp.soft_terminal =
      force_soft_terminal || cfg.terminal_mode == TerminalMode::soft_penalty;

  const Eigen::VectorXd x_bar = ref.x_bar();
  const Eigen::VectorXd v_bar = ref.v_bar();
  const Eigen::VectorXd dx0 = x_now - x_bar;
  const Weights w = make_weights(model, ref.lambda);
  hp.soft_weight = cfg.soft_weight_scale *
                   std::max({w.q_state.maxCoeff(), w.s_input.maxCoeff(), 1.0});

  ConvexProgram& pr = hp.program;
  const int num_dv = N * nv, num_dx = N * nx;
  pr.num_vars = num_dv + num_dx;
  auto dv_at = [nv](int i) { return i * nv; };
  auto dx_at = [num_dv, nx](int i) { return num_dv + (i - 1) * nx; };  // i >= 1

  // Dynamics rows dx_{i+1} - A dx_i - B dv_i = (i == 0 ? A dx0 : 0), plus
  // the hard terminal dx_N = 0 when active.
  std::vector<Eigen::Triplet<double>> eq;
  const int dyn_rows = N * nx;
  const int eq_rows = dyn_rows + (hp.soft_terminal ? 0 : nx);
  Eigen::VectorXd eq_rhs = Eigen::VectorXd::Zero(eq_rows);
  for (int i = 0; i < N; ++i) {
    const int row0 = i * nx;
    for (int r = 0; r < nx; ++r) eq.emplace_back(row0 + r, dx_at(i + 1) + r, 1.0);
    for (int r = 0; r < nx; ++r)
      for (int col = 0; col < nv; ++col)
        if (model.B(r, col) != 0.0)
          eq.emplace_back(row0 + r, dv_at(i) + col, -model.B(r, col));
    if (i == 0) {
      eq_rhs.segment(0, nx) = model.A * dx0;
    } else {
      for (int r = 0; r < nx; ++r)
        for (int col = 0; col < nx; ++col)
          if (model.A(r, col) != 0.0)
            eq.emplace_back(row0 + r, dx_at(i) + col, -model.A(r, col));
    }
  }
  if (!hp.soft_terminal)
    for (int r = 0; r < nx; ++r) eq.emplace_back(dyn_rows + r, dx_at(N) + r, 1.0);
  pr.eq_mat.resize(eq_rows, pr.num_vars);
  pr.eq_mat.setFromTriplets(eq.begin(), eq.end());
  pr.eq_rhs = eq_rhs;

  // Bounds: absolute nonnegativity of states and inputs, and the step-0
  // service cap. With V_bar = lambda and the within-step arrival credit,
  // V_0 <= W(t) + lambda becomes dV_0 <= W(t).
  constexpr double inf = std::numeric_limits<double>::infinity();
  pr.lower = Eigen::VectorXd::Constant(pr.num_vars, -inf);
  pr.upper = Eigen::VectorXd::Constant(pr.num_vars, inf);
  for (int i = 0; i < N; ++i) pr.lower.segment(dv_at(i), nv) = -v_bar;
  for (int i = 1; i <= N; ++i) pr.lower.segment(dx_at(i), nx) = -x_bar;
  pr.upper.segment(dv_at(0), m) = x_now.head(m);

  // Service coupling for predicted steps and per-zone availability.
  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> gh;
  int grow = 0;
  for (int i = 1; i < N; ++i) {
    // V_bar + dV_i <= (W_bar + dW_i) + lambda  =>  dV_i - dW_i <= W_bar
    for (int k = 0; k < m; ++k) {
      gt.emplace_back(grow, dv_at(i) + k, 1.0);
      gt.emplace_back(grow, dx_at(i) + k, -1.0);
      gh.push_back(ref.W_bar[k]);
      ++grow;
    }
  }
  const Eigen::VectorXd outflow_bar = zone_outflow(n, v_bar);
  for (int i = 0; i < N; ++i) {
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < n; ++s) {
        if (s == r) continue;
        int k = r * (n - 1) + (s > r ? s - 1 : s);
        gt.emplace_back(grow, dv_at(i) + k, 1.0);      // dV
        gt.emplace_back(grow, dv_at(i) + m + k, 1.0);  // dR
      }
      if (i == 0) {
        gh.push_back(x_now[m + r] - outflow_bar[r]);  // P(t) known exactly
      } else {
        gt.emplace_back(grow, dx_at(i) + m + r, -1.0);  // -dP_i
        gh.push_back(ref.P_bar[r] - outflow_bar[r]);
      }
      ++grow;
    }
  }
  pr.ineq_mat.resize(grow, pr.num_vars);
  pr.ineq_mat.setFromTriplets(gt.begin(), gt.end());
  pr.ineq_rhs.resize(grow);
  for (int i = 0; i < grow; ++i) pr.ineq_rhs[i] = gh[i];

  // Cost. Stage i = 0 state cost is a constant and is dropped.
  if (cfg.cost_kind == CostKind::quadratic || hp.soft_terminal) {
    std::vector<Eigen::Triplet<double>> qt;
    if (cfg.cost_kind == CostKind::quadratic) {
      for (int i = 1; i < N; ++i)
        for (int r = 0; r < nx; ++r)
          if (w.q_state[r] != 0.0)
            qt.emplace_back(dx_at(i) + r, dx_at(i) + r, 2.0 * w.q_state[r]);
      for (int i = 0; i < N; ++i)
        for (int r = 0; r < nv; ++r)
          if (w.s_input[r] != 0.0)
            qt.emplace_back(dv_at(i) + r, dv_at(i) + r, 2.0 * w.s_input[r]);
    }
    if (hp.soft_terminal)
      for (int r = 0; r < nx; ++r)
        qt.emplace_back(dx_at(N) + r, dx_at(N) + r, 2.0 * hp.soft_weight);
    pr.quadratic.resize(pr.num_vars, pr.num_vars);
    pr.quadratic.setFromTriplets(qt.begin(), qt.end());
  }
  if (cfg.cost_kind == CostKind::linear) {
    for (int i = 1; i < N; ++i)
      pr = l1_epigraph(pr, w.q_state.head(m), dx_at(i));
    for (int i = 0; i < N; ++i)
      pr = l1_epigraph(pr, w.s_input.tail(m), dv_at(i) + m);
  }
  return hp;
}

MpcController::MpcController(const LtiModel& model, MpcConfig cfg, double fleet)
    : model_(model), cfg_(std::move(cfg)), fleet_(fleet) {
  cfg_.validate();
}

void MpcController::set_reference(EquilibriumReference ref) {
  ref_ = std::move(ref);
}

MpcStep MpcController::solve_step(const Eigen::VectorXd& x_now) {
  const auto t0 = std::chrono::steady_clock::now();
  const int m = model_.m, nv = model_.input_dim(), nx = model_.state_dim();

  HorizonProgram hp = build_horizon_program(model_, ref_, x_now, cfg_, fleet_);
  Solution sol = solver_.solve(hp.program);
  bool used_soft = hp.soft_terminal;
  if (sol.status != SolveStatus::optimal && !hp.soft_terminal) {
    // Hard terminal unreachable from here; retry with the soft penalty.
    hp = build_horizon_program(model_, ref_, x_now, cfg_, fleet_, true);
    sol = solver_.solve(hp.program);
    used_soft = true;
  }

  MpcStep step;
  step.diag.status = sol.status;
  step.diag.used_soft_terminal = used_soft;
  step.diag.iterations = sol.iterations;

  const Eigen::VectorXd v_bar = ref_.v_bar();
  if (sol.status == SolveStatus::optimal) {
    Eigen::VectorXd dv0 = sol.x.segment(0, nv);
    Eigen::VectorXd action = v_bar + dv0;
    step.raw.V = action.head(m);
    step.raw.R = action.tail(m);
    step.diag.objective = sol.objective;
    const int dx_n_at = hp.N * nv + (hp.N - 1) * nx;
    step.diag.terminal_residual =
        sol.x.segment(dx_n_at, nx).cwiseAbs().maxCoeff();
  } else {
    // Last resort: the zero action is always feasible for the plant.
    step.raw.V = Eigen::VectorXd::Zero(m);
    step.raw.R = Eigen::VectorXd::Zero(m);
    step.diag.fallback_zero = true;
  }

  step.projected = step.raw;
  step.projected.V = step.projected.V.cwiseMax(0.0).cwiseMin(x_now.head(m));
  step.projected.R = step.projected.R.cwiseMax(0.0);
  for (int r = 0; r < model_.n; ++r) {
    double total = 0.0;
    for (int s = 0; s < model_.n; ++s)
      if (s != r) {
        int k = r * (model_.n - 1) + (s > r ? s - 1 : s);
        total += step.projected.V[k] + step.projected.R[k];
      }
    double cap = x_now[m + r];
    if (total > cap && total > 0.0) {
      double scale = std::max(0.0, cap) / total;
      for (int s = 0; s < model_.n; ++s)
        if (s != r) {
          int k = r * (model_.n - 1) + (s > r ? s - 1 : s);
          step.projected.V[k] *= scale;
          step.projected.R[k] *= scale;
        }
    }
  }

  step.diag.solve_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return step;
}

MpcStep solve_mpc_step(const LtiModel& model, const EquilibriumReference& ref,
                       const Eigen::VectorXd& x_now, const MpcConfig& cfg,
                       double fleet) {
  MpcController ctrl(model, cfg, fleet);
  ctrl.set_reference(ref);
  return ctrl.solve_step(x_now);
}

FracAction project_action(const FracAction& action, const Eigen::VectorXd& W_now,
                          const Eigen::VectorXd& P_now, const CompleteNetwork& net) {
  FracAction out;
  out.V = action.V.cwiseMax(0.0).cwiseMin(W_now);
  out.R = action.R.cwiseMax(0.0);
  for (int r = 0; r < net.n; ++r) {
    double total = 0.0;
    for (int s = 0; s < net.n; ++s)
      if (s != r) {
        int k = net.link_index(r, s);
        total += out.V[k] + out.R[k];
      }
    if (total > P_now[r] && total > 0.0) {
      double scale = std::max(0.0, P_now[r]) / total;
      for (int s = 0; s < net.n; ++s)
        if (s != r) {
          int k = net.link_index(r, s);
          out.V[k] *= scale;
          out.R[k] *= scale;
        }
    }
  }
  return out;
}

ControlAction randomized_round(const FracAction& action, const SystemState& state,
                               const CompleteNetwork& net, CounterRng& rng) {
  const int m = net.m;
  if (action.V.size() != m || action.R.size() != m)
    throw DimensionMismatch("action size != link count");
  ControlAction out;
  out.V.setZero(m);
  out.R.setZero(m);
  Eigen::VectorXd frac_v(m), frac_r(m);
  for (int k = 0; k < m; ++k) {
    // Guard against solver-level overshoot before rounding.
    double v = std::min(std::max(action.V[k], 0.0), static_cast<double>(state.W[k]));
    double r = std::max(action.R[k], 0.0);
    double vf = std::floor(v), rf = std::floor(r);
    frac_v[k] = v - vf;
    frac_r[k] = r - rf;
    out.V[k] = static_cast<int>(vf) + (frac_v[k] > rng.next_double() ? 1 : 0);
    out.R[k] = static_cast<int>(rf) + (frac_r[k] > rng.next_double() ? 1 : 0);
    out.V[k] = std::min(out.V[k], state.W[k]);
  }

  // Repair: per zone, drop rebalancing first (smallest fractional part
  // first, so the best-justified round-ups survive), then dispatches.
  for (int r = 0; r < net.n; ++r) {
    long total = 0;
    std::vector<int> links;
    for (int s = 0; s < net.n; ++s)
      if (s != r) {
        int k = net.link_index(r, s);
        total += out.V[k] + out.R[k];
        links.push_back(k);
      }
    long excess = total - state.P[r];
    if (excess <= 0) continue;
    auto drain = [&](Eigen::VectorXi& comp, const Eigen::VectorXd& frac) {
      std::vector<int> order = links;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return frac[a] < frac[b];
      });
      for (int k : order) {
        while (excess > 0 && comp[k] > 0) {
          --comp[k];
          --excess;
        }
        if (excess == 0) break;
      }
    };
    drain(out.R, frac_r);
    if (excess > 0) drain(out.V, frac_v);
  }
  return out;
}

EquilibriumReference refresh_reference(const DemandScenario& scenario, int step,
                                       const CompleteNetwork& net,
                                       const MpcConfig& cfg, double fleet) {
  const Eigen::VectorXd& lambda = active_lambda(scenario, step);
  return solve_reference(net, lambda, cfg.reference_kind, fleet);
}

}  // namespace amod
