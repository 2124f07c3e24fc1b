#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <string>

namespace amod {

enum class SolveStatus { optimal, infeasible, unbounded, numeric_failure };

const char* to_string(SolveStatus status);

// Convex program
//   min 0.5 x'Px + q'x
//   s.t. eq_mat x = eq_rhs
//        ineq_mat x <= ineq_rhs
//        lower <= x <= upper
// P symmetric PSD; an empty quadratic selects the LP path. lower/upper may be
// empty (no bounds) or hold +-infinity entries.
struct ConvexProgram {
  int num_vars = 0;
  Eigen::SparseMatrix<double> quadratic;
  Eigen::VectorXd linear;
  Eigen::SparseMatrix<double> eq_mat;
  Eigen::VectorXd eq_rhs;
  Eigen::SparseMatrix<double> ineq_mat;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower, upper;

  void validate() const;  // throws DimensionMismatch
  // Writes the program in CPLEX LP text format for external checking.
  std::string dump_lp_format() const;
};

struct Solution {
  SolveStatus status = SolveStatus::numeric_failure;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd eq_dual;    // multipliers for eq_mat rows
  Eigen::VectorXd ineq_dual;  // multipliers for ineq_mat rows (>= 0)
  double max_eq_residual = 0.0;
  double max_ineq_residual = 0.0;
  int iterations = 0;
};

struct IpmSettings {
  double feas_tol = 1e-8;
  double gap_abs = 1e-9;
  double gap_rel = 1e-9;
  int max_iter = 100;
};

// Mehrotra predictor-corrector primal-dual interior-point solver over a
// regularized sparse KKT system. One code path covers LP (P = 0) and QP.
// Instances are reusable; the symbolic factorization is cached across solves
// that share a sparsity pattern (the MPC re-solves an identically shaped
// program every step). Not thread-safe; use one instance per thread.
class IpmSolver {
 public:
  IpmSettings settings;

  Solution solve(const ConvexProgram& program);

 private:
  // cached sparsity pattern of the KKT matrix
  Eigen::SparseMatrix<double> kkt_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  std::vector<int> slack_diag_pos_;
  bool analyzed_ = false;
};

// One-shot convenience wrapper.
Solution solve(const ConvexProgram& program, IpmSettings settings = {});

// L1 -> LP epigraph reformulation: adds one auxiliary variable t_i per
// nonzero coeff[i], constraints +-coeff[i] * x[offset+i] <= t_i, and
// sum(t_i) to the linear objective. The first `num_vars` entries of the
// solution of the returned program recover the original variables.
ConvexProgram l1_epigraph(const ConvexProgram& program,
                          const Eigen::VectorXd& coeffs, int offset);

}  // namespace amod
