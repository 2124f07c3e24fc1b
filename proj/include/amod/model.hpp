#pragma once

#include <Eigen/Dense>
#include <string>

#include "amod/network.hpp"

namespace amod {

// First-order-lag LTI model used by the controller:
//   x(t+1) = A x(t) + B v(t) + L d(t)
// with state x = (W, P, F) and input v = (V, R). The plant keeps the exact
// delay dynamics; this approximation exists to stay delay-free.
struct LtiModel {
  int n = 0, m = 0;      // zones, links
  Eigen::MatrixXd A, B, L;
  Eigen::VectorXi T;     // link travel times (steps)

  int state_dim() const { return 2 * m + n; }
  int input_dim() const { return 2 * m; }

  // Block accessors into a state/input vector (W | P | F), (V | R).
  template <typename Vec>
  auto W(Vec&& x) const { return x.segment(0, m); }
  template <typename Vec>
  auto P(Vec&& x) const { return x.segment(m, n); }
  template <typename Vec>
  auto F(Vec&& x) const { return x.segment(m + n, m); }
  template <typename Vec>
  auto V(Vec&& v) const { return v.segment(0, m); }
  template <typename Vec>
  auto R(Vec&& v) const { return v.segment(m, m); }
};

LtiModel build_lti(const CompleteNetwork& net);

// x' = Ax + Bv + Ld, no clamping; throws DimensionMismatch.
Eigen::VectorXd step_approx(const LtiModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& v, const Eigen::VectorXd& d);

// Max violation of vehicle conservation over canonical basis states and
// inputs (d = 0); ~0 for a correctly assembled model.
double conservation_residual(const LtiModel& model);

// Row-major text dump of A, B, L for external cross-checking.
std::string dump_matrices(const LtiModel& model);

}  // namespace amod
