#include "amod/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "amod/errors.hpp"

namespace amod {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numeric_failure: return "numeric_failure";
  }
  return "unknown";
}

void ConvexProgram::validate() const {
  auto fail = [](const std::string& msg) { throw DimensionMismatch(msg); };
  if (num_vars < 0) fail("negative variable count");
  if (linear.size() != 0 && linear.size() != num_vars) fail("linear cost size");
  if (quadratic.size() != 0 &&
      (quadratic.rows() != num_vars || quadratic.cols() != num_vars))
    fail("quadratic cost shape");
  if (eq_mat.rows() != eq_rhs.size()) fail("eq rhs size");
  if (eq_mat.rows() > 0 && eq_mat.cols() != num_vars) fail("eq matrix cols");
  if (ineq_mat.rows() != ineq_rhs.size()) fail("ineq rhs size");
  if (ineq_mat.rows() > 0 && ineq_mat.cols() != num_vars) fail("ineq matrix cols");
  if (lower.size() != 0 && lower.size() != num_vars) fail("lower bound size");
  if (upper.size() != 0 && upper.size() != num_vars) fail("upper bound size");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Canonical data: min 0.5 x'Px + q'x  s.t.  A x = b,  G x <= h
// with variable bounds folded into G rows.
struct Canonical {
  int n = 0, p = 0, mf = 0;
  Eigen::SparseMatrix<double> P;  // n x n, full symmetric (may be empty)
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;  // p x n
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> G;  // mf x n
  Eigen::VectorXd h;
  int user_ineq_rows = 0;  // leading rows of G that came from ineq_mat
};

Canonical canonicalize(const ConvexProgram& in) {
  Canonical c;
  c.n = in.num_vars;
  c.q = in.linear.size() ? in.linear : Eigen::VectorXd::Zero(c.n);
  c.P = in.quadratic;
  c.A = in.eq_mat;
  c.b = in.eq_rhs;
  c.p = static_cast<int>(in.eq_mat.rows());

  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> h;
  for (int k = 0; k < in.ineq_mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(in.ineq_mat, k); it; ++it)
      gt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
  for (int i = 0; i < in.ineq_rhs.size(); ++i) h.push_back(in.ineq_rhs[i]);
  c.user_ineq_rows = static_cast<int>(h.size());
  int row = c.user_ineq_rows;
  if (in.lower.size()) {
    for (int j = 0; j < c.n; ++j)
      if (in.lower[j] > -kInf) {
        gt.emplace_back(row, j, -1.0);
        h.push_back(-in.lower[j]);
        ++row;
      }
  }
  if (in.upper.size()) {
    for (int j = 0; j < c.n; ++j)
      if (in.upper[j] < kInf) {
        gt.emplace_back(row, j, 1.0);
        h.push_back(in.upper[j]);
        ++row;
      }
  }
  c.mf = row;
  c.G.resize(c.mf, c.n);
  c.G.setFromTriplets(gt.begin(), gt.end());
  c.h.resize(c.mf);
  for (int i = 0; i < c.mf; ++i) c.h[i] = h[i];
  return c;
}

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

Solution IpmSolver::solve(const ConvexProgram& program) {
  program.validate();
  const Canonical c = canonicalize(program);
  const int n = c.n, p = c.p, mf = c.mf;
  const double delta = 1e-9;

  Solution sol;
  sol.x.setZero(n);
  sol.eq_dual.setZero(p);
  sol.ineq_dual.setZero(program.ineq_mat.rows());

  const bool has_P = c.P.nonZeros() > 0;
  auto primal_obj = [&](const Eigen::VectorXd& x) {
    double obj = c.q.dot(x);
    if (has_P) obj += 0.5 * x.dot(c.P * x);
    return obj;
  };

  // Trivial case: nothing to optimize over.
  if (n == 0) {
    sol.status = SolveStatus::optimal;
    sol.objective = sol.dual_objective = 0.0;
    return sol;
  }

  // --- Assemble the KKT lower triangle ---
  //   [ P + dI      .        .  ]
  //   [ A        -dI         .  ]
  //   [ G          0   -(s/z)-dI ]
  const int nt = n + p + mf;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(c.P.nonZeros() + c.A.nonZeros() + c.G.nonZeros() + nt);
  Eigen::VectorXd pdiag = Eigen::VectorXd::Zero(n);
  if (has_P)
    for (int k = 0; k < c.P.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(c.P, k); it; ++it) {
        if (it.row() > it.col())
          trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                             it.value());
        else if (it.row() == it.col())
          pdiag[it.row()] = it.value();
      }
  for (int j = 0; j < n; ++j) trips.emplace_back(j, j, pdiag[j] + delta);
  for (int k = 0; k < c.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(c.A, k); it; ++it)
      trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
  for (int i = 0; i < p; ++i) trips.emplace_back(n + i, n + i, -delta);
  for (int k = 0; k < c.G.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(c.G, k); it; ++it)
      trips.emplace_back(n + p + static_cast<int>(it.row()),
                         static_cast<int>(it.col()), it.value());
  for (int i = 0; i < mf; ++i) trips.emplace_back(n + p + i, n + p + i, -1.0 - delta);

  Eigen::SparseMatrix<double> kkt(nt, nt);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();

  // Columns n.. hold exactly their diagonal entry (A and G live in columns
  // 0..n-1 of the lower triangle), so slack diagonals can be poked in place.
  std::vector<int> slack_pos(mf);
  for (int i = 0; i < mf; ++i) {
    int col = n + p + i;
    slack_pos[i] = kkt.outerIndexPtr()[col];
  }

  const bool same_pattern =
      analyzed_ && kkt_.rows() == kkt.rows() && kkt_.nonZeros() == kkt.nonZeros() &&
      std::memcmp(kkt_.outerIndexPtr(), kkt.outerIndexPtr(),
                  sizeof(int) * (kkt.outerSize() + 1)) == 0 &&
      std::memcmp(kkt_.innerIndexPtr(), kkt.innerIndexPtr(),
                  sizeof(int) * kkt.nonZeros()) == 0;
  kkt_ = std::move(kkt);
  slack_diag_pos_ = std::move(slack_pos);
  if (!same_pattern) {
    ldlt_.analyzePattern(kkt_);
    analyzed_ = true;
  }

  // Exact (unregularized) KKT application for iterative refinement.
  // `quadratic` is stored as a full symmetric matrix.
  Eigen::VectorXd dvec = Eigen::VectorXd::Ones(mf);  // current s/z diagonal
  auto apply_kkt = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(nt);
    auto v0 = v.head(n);
    if (has_P)
      out.head(n) = c.P * v0;
    else
      out.head(n).setZero();
    if (p) {
      out.head(n) += c.A.transpose() * v.segment(n, p);
      out.segment(n, p) = c.A * v0;
    }
    if (mf) {
      out.head(n) += c.G.transpose() * v.tail(mf);
      out.tail(mf) = c.G * v0 - dvec.cwiseProduct(v.tail(mf));
    }
    return out;
  };

  auto factorize = [&]() -> bool {
    for (int i = 0; i < mf; ++i)
      kkt_.valuePtr()[slack_diag_pos_[i]] = -dvec[i] - delta;
    ldlt_.factorize(kkt_);
    return ldlt_.info() == Eigen::Success;
  };

  auto kkt_solve = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd d = ldlt_.solve(rhs);
    for (int round = 0; round < 2; ++round) {
      Eigen::VectorXd r = rhs - apply_kkt(d);
      if (inf_norm(r) < 1e-11 * (1.0 + inf_norm(rhs))) break;
      d += ldlt_.solve(r);
    }
    return d;
  };

  // --- No inequalities: one regularized KKT solve ---
  if (mf == 0) {
    if (!factorize()) {
      sol.status = SolveStatus::numeric_failure;
      return sol;
    }
    Eigen::VectorXd rhs(nt);
    rhs.head(n) = -c.q;
    rhs.tail(p) = c.b;
    Eigen::VectorXd d = kkt_solve(rhs);
    sol.x = d.head(n);
    sol.eq_dual = d.tail(p);
    Eigen::VectorXd rd = has_P ? Eigen::VectorXd(c.P * sol.x + c.q) : c.q;
    if (p) rd += c.A.transpose() * sol.eq_dual;
    Eigen::VectorXd rp = p ? Eigen::VectorXd(c.A * sol.x - c.b) : Eigen::VectorXd();
    sol.max_eq_residual = inf_norm(rp);
    double xs = 1.0 + inf_norm(sol.x);
    if (inf_norm(rd) > 1e-6 * xs) {
      // Linear objective has a component along the feasible subspace.
      sol.status = SolveStatus::unbounded;
      return sol;
    }
    if (p && sol.max_eq_residual > 1e-6 * (1.0 + inf_norm(c.b))) {
      sol.status = SolveStatus::infeasible;
      return sol;
    }
    sol.status = SolveStatus::optimal;
    sol.objective = primal_obj(sol.x);
    sol.dual_objective = sol.objective;
    sol.iterations = 1;
    return sol;
  }

  // --- Interior-point initialization (CVXOPT-style) ---
  if (!factorize()) {
    sol.status = SolveStatus::numeric_failure;
    return sol;
  }
  Eigen::VectorXd rhs(nt);
  rhs.head(n) = -c.q;
  rhs.segment(n, p) = c.b;
  rhs.tail(mf) = c.h;
  Eigen::VectorXd init = kkt_solve(rhs);
  Eigen::VectorXd x = init.head(n);
  Eigen::VectorXd y = init.segment(n, p);
  Eigen::VectorXd z = init.tail(mf);
  Eigen::VectorXd s = -z;
  double smin = s.minCoeff();
  if (smin <= 0.0) s.array() += 1.0 - smin;
  double zmin = z.minCoeff();
  if (zmin <= 0.0) z.array() += 1.0 - zmin;

  const double bnorm = 1.0 + inf_norm(c.b);
  const double hnorm = 1.0 + inf_norm(c.h);
  const double qnorm = 1.0 + inf_norm(c.q);

  Eigen::VectorXd best_x = x, best_y = y, best_z = z;
  double best_err = kInf;
  SolveStatus status = SolveStatus::numeric_failure;
  int iter = 0;
  double mu = s.dot(z) / mf;

  for (iter = 0; iter < settings.max_iter; ++iter) {
    Eigen::VectorXd px = has_P ? Eigen::VectorXd(c.P * x) : Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rd = px + c.q + c.G.transpose() * z;
    if (p) rd += c.A.transpose() * y;
    Eigen::VectorXd rp = p ? Eigen::VectorXd(c.A * x - c.b) : Eigen::VectorXd();
    Eigen::VectorXd rg = c.G * x + s - c.h;
    mu = s.dot(z) / mf;

    double rp_rel = inf_norm(rp) / bnorm;
    double rg_rel = inf_norm(rg) / hnorm;
    double rd_rel = inf_norm(rd) / (qnorm + inf_norm(px));
    double pobj = primal_obj(x);
    double dobj = -0.5 * x.dot(px) - c.h.dot(z) - (p ? c.b.dot(y) : 0.0);
    double gap_rel = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

    double err = std::max({rp_rel, rg_rel, rd_rel, gap_rel});
    if (err < best_err) {
      best_err = err;
      best_x = x;
      best_y = y;
      best_z = z;
    }

    if (rp_rel <= settings.feas_tol && rg_rel <= settings.feas_tol &&
        rd_rel <= settings.feas_tol &&
        (mu <= settings.gap_abs || gap_rel <= settings.gap_rel)) {
      status = SolveStatus::optimal;
      break;
    }

    // Divergence certificates.
    double dual_scale = std::max(inf_norm(z), p ? inf_norm(y) : 0.0);
    if (dual_scale > 1e6) {
      Eigen::VectorXd cert = c.G.transpose() * z;
      if (p) cert += c.A.transpose() * y;
      double val = -(c.h.dot(z) + (p ? c.b.dot(y) : 0.0));
      if (val > 0 && inf_norm(cert) <= 1e-7 * val) {
        status = SolveStatus::infeasible;
        break;
      }
    }
    double xnorm = inf_norm(x);
    if (xnorm > 1e7) {
      Eigen::VectorXd xn = x / xnorm;
      double gmax = (c.G * xn).maxCoeff();
      double anorm = p ? inf_norm(c.A * xn) : 0.0;
      double pnorm = has_P ? inf_norm(c.P * xn) : 0.0;
      if (anorm <= 1e-7 && gmax <= 1e-7 && pnorm <= 1e-7 && c.q.dot(xn) < -1e-9) {
        status = SolveStatus::unbounded;
        break;
      }
    }

    dvec = s.cwiseQuotient(z);
    if (!factorize()) {
      status = SolveStatus::numeric_failure;
      break;
    }

    auto direction = [&](const Eigen::VectorXd& rc) {
      Eigen::VectorXd r(nt);
      r.head(n) = -rd;
      r.segment(n, p) = -rp;
      r.tail(mf) = -rg + rc.cwiseQuotient(z);
      Eigen::VectorXd d = kkt_solve(r);
      Eigen::VectorXd dz = d.tail(mf);
      Eigen::VectorXd ds = -(rc + s.cwiseProduct(dz)).cwiseQuotient(z);
      return std::make_tuple(d, ds, dz);
    };
    auto step_len = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dz) {
      double a = 1.0;
      for (int i = 0; i < mf; ++i) {
        if (ds[i] < 0) a = std::min(a, -s[i] / ds[i]);
        if (dz[i] < 0) a = std::min(a, -z[i] / dz[i]);
      }
      return a;
    };

    // Predictor.
    Eigen::VectorXd rc_aff = s.cwiseProduct(z);
    auto [d_aff, ds_aff, dz_aff] = direction(rc_aff);
    double a_aff = step_len(ds_aff, dz_aff);
    double mu_aff = (s + a_aff * ds_aff).dot(z + a_aff * dz_aff) / mf;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // Corrector.
    Eigen::VectorXd rc = s.cwiseProduct(z) + ds_aff.cwiseProduct(dz_aff).eval();
    rc.array() -= sigma * mu;
    auto [d, ds, dz] = direction(rc);
    double alpha = std::min(1.0, 0.99 * step_len(ds, dz));
    if (alpha < 1e-10) {
      status = SolveStatus::numeric_failure;
      break;
    }

    x += alpha * d.head(n);
    if (p) y += alpha * d.segment(n, p);
    z += alpha * d.tail(mf);
    s += alpha * ds;
  }

  if (status == SolveStatus::numeric_failure && best_err <= 1e-6) {
    // Stalled but near-feasible and near-optimal; accept the best iterate.
    status = SolveStatus::optimal;
    x = best_x;
    y = best_y;
    z = best_z;
  }

  sol.status = status;
  sol.iterations = iter;
  if (status == SolveStatus::optimal) {
    sol.x = x;
    sol.objective = primal_obj(x);
    Eigen::VectorXd px = has_P ? Eigen::VectorXd(c.P * x) : Eigen::VectorXd::Zero(n);
    sol.dual_objective = -0.5 * x.dot(px) - c.h.dot(z) - (p ? c.b.dot(y) : 0.0);
    sol.eq_dual = y;
    sol.ineq_dual = z.head(program.ineq_mat.rows());
    sol.max_eq_residual = p ? inf_norm(c.A * x - c.b) : 0.0;
    Eigen::VectorXd gviol = c.G * x - c.h;
    sol.max_ineq_residual = gviol.size() ? std::max(0.0, gviol.maxCoeff()) : 0.0;
  }
  return sol;
}

Solution solve(const ConvexProgram& program, IpmSettings settings) {
  IpmSolver solver;
  solver.settings = settings;
  return solver.solve(program);
}

ConvexProgram l1_epigraph(const ConvexProgram& program,
                          const Eigen::VectorXd& coeffs, int offset) {
  program.validate();
  if (offset < 0 || offset + coeffs.size() > program.num_vars)
    throw DimensionMismatch("l1_epigraph slice out of range");

  std::vector<int> active;
  for (int i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] != 0.0) active.push_back(i);

  ConvexProgram out = program;
  const int n0 = program.num_vars;
  const int na = static_cast<int>(active.size());
  out.num_vars = n0 + na;

  out.linear = Eigen::VectorXd::Zero(out.num_vars);
  if (program.linear.size()) out.linear.head(n0) = program.linear;
  out.linear.tail(na).setOnes();

  if (program.quadratic.nonZeros() > 0) {
    Eigen::SparseMatrix<double> q2(out.num_vars, out.num_vars);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < program.quadratic.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(program.quadratic, k); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    q2.setFromTriplets(t.begin(), t.end());
    out.quadratic = q2;
  } else {
    out.quadratic.resize(0, 0);
  }

  auto widen = [&](const Eigen::SparseMatrix<double>& mat) {
    Eigen::SparseMatrix<double> wide(mat.rows(), out.num_vars);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < mat.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(mat, k); it; ++it)
        t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    wide.setFromTriplets(t.begin(), t.end());
    return wide;
  };
  out.eq_mat = widen(program.eq_mat);

  std::vector<Eigen::Triplet<double>> gt;
  std::vector<double> h;
  for (int k = 0; k < program.ineq_mat.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(program.ineq_mat, k); it; ++it)
      gt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int i = 0; i < program.ineq_rhs.size(); ++i) h.push_back(program.ineq_rhs[i]);
  int row = static_cast<int>(h.size());
  for (int a = 0; a < na; ++a) {
    int j = offset + active[a];
    double cj = coeffs[active[a]];
    gt.emplace_back(row, j, cj);
    gt.emplace_back(row, n0 + a, -1.0);
    h.push_back(0.0);
    ++row;
    gt.emplace_back(row, j, -cj);
    gt.emplace_back(row, n0 + a, -1.0);
    h.push_back(0.0);
    ++row;
  }
  out.ineq_mat.resize(row, out.num_vars);
  out.ineq_mat.setFromTriplets(gt.begin(), gt.end());
  out.ineq_rhs.resize(row);
  for (int i = 0; i < row; ++i) out.ineq_rhs[i] = h[i];

  if (program.lower.size()) {
    out.lower = Eigen::VectorXd::Constant(out.num_vars, -kInf);
    out.lower.head(n0) = program.lower;
  }
  if (program.upper.size()) {
    out.upper = Eigen::VectorXd::Constant(out.num_vars, kInf);
    out.upper.head(n0) = program.upper;
  }
  return out;
}

std::string ConvexProgram::dump_lp_format() const {
  validate();
  std::ostringstream os;
  os.precision(12);
  auto var = [](int j) { return "x" + std::to_string(j); };
  os << "\\ generated program dump\nMinimize\n obj:";
  bool any = false;
  for (int j = 0; j < linear.size(); ++j)
    if (linear[j] != 0.0) {
      os << (linear[j] >= 0 ? " + " : " - ") << std::abs(linear[j]) << " " << var(j);
      any = true;
    }
  if (quadratic.nonZeros() > 0) {
    os << " + [";
    for (int k = 0; k < quadratic.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(quadratic, k); it; ++it) {
        os << (it.value() >= 0 ? " + " : " - ") << std::abs(it.value()) << " "
           << var(static_cast<int>(it.row())) << " * " << var(static_cast<int>(it.col()));
      }
    os << " ] / 2";
    any = true;
  }
  if (!any) os << " 0 " << var(0);
  os << "\nSubject To\n";
  Eigen::SparseMatrix<double, Eigen::RowMajor> eq(eq_mat), g(ineq_mat);
  for (int i = 0; i < eq.rows(); ++i) {
    os << " e" << i << ":";
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(eq, i); it; ++it)
      os << (it.value() >= 0 ? " + " : " - ") << std::abs(it.value()) << " "
         << var(static_cast<int>(it.col()));
    os << " = " << eq_rhs[i] << "\n";
  }
  for (int i = 0; i < g.rows(); ++i) {
    os << " c" << i << ":";
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g, i); it; ++it)
      os << (it.value() >= 0 ? " + " : " - ") << std::abs(it.value()) << " "
         << var(static_cast<int>(it.col()));
    os << " <= " << ineq_rhs[i] << "\n";
  }
  os << "Bounds\n";
  for (int j = 0; j < num_vars; ++j) {
    double lo = lower.size() ? lower[j] : -kInf;
    double hi = upper.size() ? upper[j] : kInf;
    if (lo == -kInf && hi == kInf)
      os << " " << var(j) << " free\n";
    else {
      if (lo != -kInf) os << " " << var(j) << " >= " << lo << "\n";
      if (hi != kInf) os << " " << var(j) << " <= " << hi << "\n";
    }
  }
  os << "End\n";
  return os.str();
}

}  // namespace amod
