#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "amod/model.hpp"
#include "amod/network.hpp"
#include "amod/solver.hpp"

namespace amod {

enum class CostKind { linear, quadratic };

const char* to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& s);

// Equilibrium of the lag model under d = lambda: W_bar = 0, V_bar = lambda,
// F_bar = T (lambda + R_bar), with R_bar a nonnegative balanced rebalancing
// flow (E (R_bar + lambda) = 0). min_fleet = 1'F_bar is the in-transit count
// needed to sustain it; the slack fleet - min_fleet sits idle, split
// uniformly across zones in P_bar.
struct EquilibriumReference {
  Eigen::VectorXd W_bar, P_bar, F_bar, V_bar, R_bar;
  Eigen::VectorXd lambda;
  double min_fleet = 0.0;
  CostKind cost = CostKind::linear;

  Eigen::VectorXd x_bar() const;  // (W, P, F)
  Eigen::VectorXd v_bar() const;  // (V, R)

  std::string to_json() const;
  static EquilibriumReference from_json(const std::string& text);
};

// Solves min J(R) s.t. E(R + lambda) = 0, R >= 0 with J linear (sum T_i R_i,
// valid as the l1 cost since R >= 0) or quadratic (sum T_i R_i^2), then
// assembles the reference. `fleet`, when given and above min_fleet, fills
// P_bar uniformly with the slack.
EquilibriumReference solve_reference(const CompleteNetwork& net,
                                     const Eigen::VectorXd& lambda, CostKind cost,
                                     std::optional<double> fleet = std::nullopt);

double min_fleet_size(const EquilibriumReference& ref);

// Assembles the reference from a given balanced R without optimizing.
// Throws NotBalanced if ||E(R + lambda)||_inf > 1e-8 or R has negative entries.
EquilibriumReference equilibrium_from_rebalance(const CompleteNetwork& net,
                                                const Eigen::VectorXd& lambda,
                                                const Eigen::VectorXd& R,
                                                std::optional<double> fleet = std::nullopt);

}  // namespace amod
