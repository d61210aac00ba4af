#include "nkm/lssvm.hpp"

#include <Eigen/Dense>
#include <stdexcept>

#include "nkm/kernel.hpp"

namespace nkm {

double DualLSSVM::predict(const Eigen::VectorXd& x) const {
  if (x.size() != support_X.cols())
    throw std::invalid_argument("DualLSSVM::predict: dimension mismatch");
  double s = bias;
  for (Eigen::Index i = 0; i < support_X.rows(); ++i)
    s += alpha(i) * gaussian_kernel(support_X.row(i).transpose(), x, sigma);
  return s;
}

Eigen::VectorXd DualLSSVM::predict_rows(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd K = kernel_matrix(X, support_X, sigma);
  return (K * alpha).array() + bias;
}

DualLSSVM lssvm_dual_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double gamma, double sigma) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("lssvm_dual_train: need at least 2 points");
  if (y.size() != n) throw std::invalid_argument("lssvm_dual_train: y size mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("lssvm_dual_train: gamma must be > 0");

  Eigen::MatrixXd A(n + 1, n + 1);
  A.topLeftCorner(n, n) = kernel_matrix(X, X, sigma);
  A.topLeftCorner(n, n).diagonal().array() += 1.0 / gamma;
  A.topRightCorner(n, 1).setOnes();
  A.bottomLeftCorner(1, n).setOnes();
  A(n, n) = 0.0;

  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = y;
  rhs(n) = 0.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd sol = lu.solve(rhs);

  const double resid = (A * sol - rhs).norm() / rhs.norm();
  if (!sol.allFinite() || resid > 1e-8)
    throw std::runtime_error("lssvm_dual_train: singular or ill-conditioned dual system");

  DualLSSVM model;
  model.alpha = sol.head(n);
  model.bias = sol(n);
  model.support_X = X;
  model.sigma = sigma;
  model.gamma = gamma;
  return model;
}

PrimalModel lssvm_primal_train(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                               double gamma) {
  const Eigen::Index n = Phi.rows();
  const Eigen::Index h = Phi.cols();
  if (n < 2) throw std::invalid_argument("lssvm_primal_train: need at least 2 points");
  if (h < 1) throw std::invalid_argument("lssvm_primal_train: empty feature map");
  if (y.size() != n) throw std::invalid_argument("lssvm_primal_train: y size mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("lssvm_primal_train: gamma must be > 0");

  // Stationarity of the objective:
  //   (Phi^T Phi + I/gamma) w + Phi^T 1 b = Phi^T y
  //   1^T Phi w + n b = 1^T y
  Eigen::MatrixXd A(h + 1, h + 1);
  A.topLeftCorner(h, h) = Phi.transpose() * Phi;
  A.topLeftCorner(h, h).diagonal().array() += 1.0 / gamma;
  A.topRightCorner(h, 1) = Phi.colwise().sum().transpose();
  A.bottomLeftCorner(1, h) = Phi.colwise().sum();
  A(h, h) = static_cast<double>(n);

  Eigen::VectorXd rhs(h + 1);
  rhs.head(h) = Phi.transpose() * y;
  rhs(h) = y.sum();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  Eigen::VectorXd sol = ldlt.solve(rhs);
  if (!sol.allFinite() || (A * sol - rhs).norm() > 1e-8 * rhs.norm() + 1e-12) {
    A.diagonal().array() += 1e-12;  // jitter for rank-deficient feature maps
    sol = Eigen::LDLT<Eigen::MatrixXd>(A).solve(rhs);
    if (!sol.allFinite())
      throw std::runtime_error("lssvm_primal_train: normal equations unsolvable");
  }

  PrimalModel model;
  model.w = sol.head(h);
  model.bias = sol(h);
  return model;
}

}  // namespace nkm
