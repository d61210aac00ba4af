#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace nkm {

/// Nystrom feature map: component i of phi(x) is
///   lambda_i^{-1/2} * sum_k U(k,i) K(p_k, x)
/// over the eigenpairs (lambda_i, u_i) of the Gaussian Gram matrix of the
/// stored prototype rows. Eigenvalues are kept in descending order and
/// components with lambda <= 1e-10 * lambda_max are dropped, so the rank can
/// be below the prototype count.
class NystromMap {
 public:
  NystromMap() = default;

  static NystromMap create(Eigen::MatrixXd prototypes, double sigma);

  /// Uniform random subsample of `count` rows of X as prototypes.
  static NystromMap from_subsample(const Eigen::MatrixXd& X, int count, double sigma,
                                   std::uint64_t seed);

  int input_dim() const { return static_cast<int>(prototypes_.cols()); }
  int prototype_count() const { return static_cast<int>(prototypes_.rows()); }
  int rank() const { return static_cast<int>(lambda_.size()); }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& prototypes() const { return prototypes_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const { return U_; }

  /// phi(x), length rank().
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  /// One row of features per row of X: X (n x d) -> n x rank().
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& X) const;

 private:
  Eigen::MatrixXd prototypes_;  // m x d
  Eigen::VectorXd lambda_;      // r, descending
  Eigen::MatrixXd U_;           // m x r, eigenvector columns
  double sigma_ = 1.0;
};

}  // namespace nkm
