#include "nkm/nystrom.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "nkm/kernel.hpp"
#include "nkm/rng.hpp"

namespace nkm {

NystromMap NystromMap::create(Eigen::MatrixXd prototypes, double sigma) {
  if (prototypes.rows() < 1)
    throw std::invalid_argument("NystromMap: need at least one prototype");
  if (!(sigma > 0.0)) throw std::invalid_argument("NystromMap: sigma must be > 0");

  const Eigen::MatrixXd gram = kernel_matrix(prototypes, prototypes, sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("NystromMap: eigendecomposition failed");

  // Eigen returns ascending eigenvalues; keep descending order.
  const Eigen::Index m = gram.rows();
  const double lambda_max = eig.eigenvalues()(m - 1);
  const double tol = 1e-10 * lambda_max;

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = m - 1; i >= 0; --i)
    if (eig.eigenvalues()(i) > tol) keep.push_back(i);
  if (keep.empty()) throw std::runtime_error("NystromMap: Gram matrix numerically zero");

  NystromMap map;
  map.prototypes_ = std::move(prototypes);
  map.sigma_ = sigma;
  map.lambda_.resize(static_cast<Eigen::Index>(keep.size()));
  map.U_.resize(m, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    map.lambda_(static_cast<Eigen::Index>(r)) = eig.eigenvalues()(keep[r]);
    map.U_.col(static_cast<Eigen::Index>(r)) = eig.eigenvectors().col(keep[r]);
  }
  return map;
}

NystromMap NystromMap::from_subsample(const Eigen::MatrixXd& X, int count, double sigma,
                                      std::uint64_t seed) {
  const auto n = static_cast<int>(X.rows());
  if (count < 1 || count > n)
    throw std::invalid_argument("NystromMap: prototype count out of range");

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  Eigen::MatrixXd prototypes(count, X.cols());
  for (int i = 0; i < count; ++i) prototypes.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
  return create(std::move(prototypes), sigma);
}

Eigen::VectorXd NystromMap::apply(const Eigen::VectorXd& x) const {
  if (x.size() != prototypes_.cols())
    throw std::invalid_argument("NystromMap::apply: dimension mismatch");
  Eigen::VectorXd k(prototypes_.rows());
  for (Eigen::Index i = 0; i < prototypes_.rows(); ++i)
    k(i) = gaussian_kernel(prototypes_.row(i).transpose(), x, sigma_);
  return lambda_.array().rsqrt() * (U_.transpose() * k).array();
}

Eigen::MatrixXd NystromMap::apply_rows(const Eigen::MatrixXd& X) const {
  if (X.cols() != prototypes_.cols())
    throw std::invalid_argument("NystromMap::apply_rows: dimension mismatch");
  const Eigen::MatrixXd K = kernel_matrix(X, prototypes_, sigma_);  // n x m
  return (K * U_).array().rowwise() * lambda_.transpose().array().rsqrt();
}

}  // namespace nkm
