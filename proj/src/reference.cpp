#include "amod/reference.hpp"

#include <nlohmann/json.hpp>

#include "amod/errors.hpp"

namespace amod {

using nlohmann::json;

const char* to_string(CostKind kind) {
  return kind == CostKind::linear ? "linear" : "quadratic";
}

CostKind cost_kind_from_string(const std::string& s) {
  if (s == "linear") return CostKind::linear;
  if (s == "quadratic") return CostKind::quadratic;
  throw ConfigError("unknown cost kind '" + s + "'");
}

Eigen::VectorXd EquilibriumReference::x_bar() const {
  Eigen::VectorXd x(W_bar.size() + P_bar.size() + F_bar.size());
  x << W_bar, P_bar, F_bar;
  return x;
}

Eigen::VectorXd EquilibriumReference::v_bar() const {
  Eigen::VectorXd v(V_bar.size() + R_bar.size());
  v << V_bar, R_bar;
  return v;
}

namespace {

constexpr double kBalanceTol = 1e-8;

EquilibriumReference assemble(const CompleteNetwork& net,
                              const Eigen::VectorXd& lambda,
                              const Eigen::VectorXd& R, CostKind cost,
                              std::optional<double> fleet) {
  EquilibriumReference ref;
  ref.cost = cost;
  ref.lambda = lambda;
  ref.W_bar = Eigen::VectorXd::Zero(net.m);
  ref.V_bar = lambda;
  ref.R_bar = R;
  ref.F_bar = net.T.cast<double>().cwiseProduct(lambda + R);
  ref.min_fleet = ref.F_bar.sum();
  ref.P_bar = Eigen::VectorXd::Zero(net.n);
  if (fleet && *fleet > ref.min_fleet)
    ref.P_bar.setConstant((*fleet - ref.min_fleet) / net.n);
  return ref;
}

}  // namespace

EquilibriumReference solve_reference(const CompleteNetwork& net,
                                     const Eigen::VectorXd& lambda, CostKind cost,
                                     std::optional<double> fleet) {
  if (lambda.size() != net.m)
    throw DimensionMismatch("lambda size != link count");
  if ((lambda.array() < 0.0).any())
    throw ConfigError("lambda must be nonnegative");

  // Trivial equilibrium for zero demand.
  if (lambda.isZero(0.0))
    return assemble(net, lambda, Eigen::VectorXd::Zero(net.m), cost, fleet);

  ConvexProgram prog;
  prog.num_vars = net.m;
  prog.eq_mat = net.E;
  prog.eq_rhs = -(net.E * lambda);
  prog.lower = Eigen::VectorXd::Zero(net.m);
  Eigen::VectorXd tvec = net.T.cast<double>();
  if (cost == CostKind::linear) {
    // ||T R||_1 == T'R on R >= 0.
    prog.linear = tvec;
  } else {
    // sum T_i R_i^2 = 0.5 R' (2 diag(T)) R
    Eigen::SparseMatrix<double> q(net.m, net.m);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < net.m; ++k) t.emplace_back(k, k, 2.0 * tvec[k]);
    q.setFromTriplets(t.begin(), t.end());
    prog.quadratic = q;
  }

  IpmSolver solver;
  solver.settings.feas_tol = 1e-10;
  solver.settings.gap_abs = 1e-12;
  solver.settings.gap_rel = 1e-12;
  solver.settings.max_iter = 200;
  Solution sol = solver.solve(prog);
  if (sol.status == SolveStatus::infeasible)
    throw SolverFailure("reference program infeasible; complete strongly "
                        "connected networks always admit a balanced flow");
  if (sol.status != SolveStatus::optimal)
    throw SolverFailure(std::string("reference program: ") + to_string(sol.status));

  Eigen::VectorXd R = sol.x.cwiseMax(0.0);
  double residual = (net.E * (R + lambda)).cwiseAbs().maxCoeff();
  if (residual > kBalanceTol)
    throw SolverFailure("reference balance residual " + std::to_string(residual));
  return assemble(net, lambda, R, cost, fleet);
}

double min_fleet_size(const EquilibriumReference& ref) { return ref.min_fleet; }

EquilibriumReference equilibrium_from_rebalance(const CompleteNetwork& net,
                                                const Eigen::VectorXd& lambda,
                                                const Eigen::VectorXd& R,
                                                std::optional<double> fleet) {
  if (lambda.size() != net.m || R.size() != net.m)
    throw DimensionMismatch("lambda/R size != link count");
  if ((R.array() < -kBalanceTol).any())
    throw NotBalanced("R has negative entries");
  double residual = (net.E * (R + lambda)).cwiseAbs().maxCoeff();
  if (residual > kBalanceTol)
    throw NotBalanced("balance residual " + std::to_string(residual) +
                      " exceeds tolerance");
  return assemble(net, lambda, R.cwiseMax(0.0), CostKind::linear, fleet);
}

std::string EquilibriumReference::to_json() const {
  json doc;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  doc["W_bar"] = vec(W_bar);
  doc["P_bar"] = vec(P_bar);
  doc["F_bar"] = vec(F_bar);
  doc["V_bar"] = vec(V_bar);
  doc["R_bar"] = vec(R_bar);
  doc["lambda"] = vec(lambda);
  doc["min_fleet"] = min_fleet;
  doc["cost"] = std::string(amod::to_string(cost));
  return doc.dump(2);
}

EquilibriumReference EquilibriumReference::from_json(const std::string& text) {
  json doc = json::parse(text);
  EquilibriumReference ref;
  auto vec = [&doc](const char* key) {
    std::vector<double> v = doc.at(key).get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  ref.W_bar = vec("W_bar");
  ref.P_bar = vec("P_bar");
  ref.F_bar = vec("F_bar");
  ref.V_bar = vec("V_bar");
  ref.R_bar = vec("R_bar");
  ref.lambda = vec("lambda");
  ref.min_fleet = doc.at("min_fleet").get<double>();
  ref.cost = cost_kind_from_string(doc.at("cost").get<std::string>());
  return ref;
}

}  // namespace amod
