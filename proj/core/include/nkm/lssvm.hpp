#pragma once

#include <Eigen/Core>

namespace nkm {

/// LS-SVM solved in the dual: the coefficients (alpha, b) of the linear
/// system [[K + I/gamma, 1], [1^T, 0]] [alpha; b] = [y; 0] over the Gaussian
/// kernel of the stored training inputs.
struct DualLSSVM {
  Eigen::VectorXd alpha;
  double bias = 0.0;
  Eigen::MatrixXd support_X;  // n x d training inputs
  double sigma = 1.0;
  double gamma = 1.0;

  /// Score of one input: sum_i alpha_i K(x, x_i) + b.
  double predict(const Eigen::VectorXd& x) const;
  /// Scores for each row of X.
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& X) const;
};

/// Ridge regression in an explicit feature space: scores are w^T phi(x) + b.
struct PrimalModel {
  Eigen::VectorXd w;
  double bias = 0.0;

  double predict(const Eigen::VectorXd& phi) const { return w.dot(phi) + bias; }
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& Phi) const {
    return (Phi * w).array() + bias;
  }
};

/// Solves the LS-SVM dual system for real targets y (binary classification
/// passes +-1). Throws on a numerically singular system.
DualLSSVM lssvm_dual_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double gamma, double sigma);

/// Regularized least squares over explicit features Phi (n x h):
/// minimize 1/2 w^T w + gamma/2 * sum_i (y_i - w^T phi_i - b)^2.
/// With an exact feature map (full-rank Nystrom) this reproduces the dual
/// solution at the same gamma. A rank-deficient normal system gets 1e-12
/// diagonal jitter before a retry.
PrimalModel lssvm_primal_train(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                               double gamma);

}  // namespace nkm
