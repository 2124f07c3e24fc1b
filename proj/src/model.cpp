#include "amod/model.hpp"

#include <sstream>

#include "amod/errors.hpp"

namespace amod {

LtiModel build_lti(const CompleteNetwork& net) {
  LtiModel mdl;
  mdl.n = net.n;
  mdl.m = net.m;
  mdl.T = net.T;
  const int n = net.n, m = net.m;
  const int nx = 2 * m + n, nv = 2 * m;

  Eigen::VectorXd tinv(m);
  for (int k = 0; k < m; ++k) tinv[k] = 1.0 / net.T[k];

  Eigen::MatrixXd ein = Eigen::MatrixXd(net.E_in);
  Eigen::MatrixXd eout = Eigen::MatrixXd(net.E_out);

  mdl.A = Eigen::MatrixXd::Zero(nx, nx);
  mdl.A.block(0, 0, m, m).setIdentity();                       // W <- W
  mdl.A.block(m, m, n, n).setIdentity();                       // P <- P
  mdl.A.block(m, m + n, n, m) = ein * tinv.asDiagonal();       // P <- E_in T^-1 F
  mdl.A.block(m + n, m + n, m, m) =
      Eigen::MatrixXd((Eigen::VectorXd::Ones(m) - tinv).asDiagonal());  // F lag

  mdl.B = Eigen::MatrixXd::Zero(nx, nv);
  mdl.B.block(0, 0, m, m) = -Eigen::MatrixXd::Identity(m, m);  // W <- -V
  mdl.B.block(m, 0, n, m) = -eout;                             // P <- -E_out V
  mdl.B.block(m, m, n, m) = -eout;                             // P <- -E_out R
  mdl.B.block(m + n, 0, m, m).setIdentity();                   // F <- V
  mdl.B.block(m + n, m, m, m).setIdentity();                   // F <- R

  mdl.L = Eigen::MatrixXd::Zero(nx, m);
  mdl.L.block(0, 0, m, m).setIdentity();
  return mdl;
}

Eigen::VectorXd step_approx(const LtiModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& v, const Eigen::VectorXd& d) {
  if (x.size() != model.state_dim())
    throw DimensionMismatch("state size " + std::to_string(x.size()) +
                            " != " + std::to_string(model.state_dim()));
  if (v.size() != model.input_dim())
    throw DimensionMismatch("input size " + std::to_string(v.size()) +
                            " != " + std::to_string(model.input_dim()));
  if (d.size() != model.m)
    throw DimensionMismatch("disturbance size " + std::to_string(d.size()) +
                            " != " + std::to_string(model.m));
  return model.A * x + model.B * v + model.L * d;
}

double conservation_residual(const LtiModel& model) {
  const int n = model.n, m = model.m;
  // c'x = total vehicles; conservation means c'A = c' on states and c'B = 0.
  Eigen::RowVectorXd cvec = Eigen::RowVectorXd::Zero(model.state_dim());
  cvec.segment(m, n + m).setOnes();
  double res = (cvec * model.A - cvec).cwiseAbs().maxCoeff();
  res = std::max(res, (cvec * model.B).cwiseAbs().maxCoeff());
  res = std::max(res, (cvec * model.L).cwiseAbs().maxCoeff());
  return res;
}

std::string dump_matrices(const LtiModel& model) {
  std::ostringstream os;
  os.precision(17);
  auto dump = [&os](const char* name, const Eigen::MatrixXd& mat) {
    os << name << " " << mat.rows() << " " << mat.cols() << "\n";
    for (int i = 0; i < mat.rows(); ++i) {
      for (int j = 0; j < mat.cols(); ++j) os << (j ? " " : "") << mat(i, j);
      os << "\n";
    }
  };
  dump("A", model.A);
  dump("B", model.B);
  dump("L", model.L);
  return os.str();
}

}  // namespace amod
