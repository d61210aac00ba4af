#pragma once

#include <Eigen/Core>

namespace nkm {

/// Gaussian kernel K(x,y) = exp(-||x-y||^2 / (2 sigma^2)), sigma > 0.
double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma);

/// Pairwise kernel matrix: entry (i,j) = K(X.row(i), Z.row(j), sigma).
/// Row blocks may be computed on several threads (capped by NK_THREADS);
/// every entry is computed independently so the result does not depend on
/// the thread count.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                              double sigma);

}  // namespace nkm
