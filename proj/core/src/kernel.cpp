#include "nkm/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "nkm/parallel.hpp"

namespace nkm {

double gaussian_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
  if (x.size() != y.size())
    throw std::invalid_argument("gaussian_kernel: dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma must be > 0");
  const double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                              double sigma) {
  if (X.cols() != Z.cols())
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel_matrix: sigma must be > 0");

  const Eigen::Index n = X.rows();
  const Eigen::Index m = Z.rows();
  Eigen::MatrixXd K(n, m);

  // Columns of the transposed inputs are contiguous, so each entry evaluates
  // the exact expression of gaussian_kernel (bit-for-bit).
  const Eigen::MatrixXd Xt = X.transpose();
  const Eigen::MatrixXd Zt = Z.transpose();
  parallel_chunks(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto xi = Xt.col(static_cast<Eigen::Index>(i));
      for (Eigen::Index j = 0; j < m; ++j) {
        const double d2 = (xi - Zt.col(j)).squaredNorm();
        K(static_cast<Eigen::Index>(i), j) = std::exp(-d2 / (2.0 * sigma * sigma));
      }
    }
  });
  return K;
}

}  // namespace nkm
