#include "nkm/rff.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nkm/rng.hpp"

namespace nkm {

RFFMap RFFMap::create(int input_dim, int num_features, double sigma, std::uint64_t seed) {
  if (input_dim < 1 || num_features < 1)
    throw std::invalid_argument("RFFMap: dimensions must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("RFFMap: sigma must be > 0");

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / sigma);

  RFFMap map;
  map.zeta_.resize(num_features, input_dim);
  for (Eigen::Index i = 0; i < map.zeta_.rows(); ++i)
    for (Eigen::Index j = 0; j < map.zeta_.cols(); ++j) map.zeta_(i, j) = normal(rng);
  map.sigma_ = sigma;
  map.seed_ = seed;
  map.scale_ = 1.0 / std::sqrt(static_cast<double>(num_features));
  return map;
}

RFFMap RFFMap::from_frequencies(Eigen::MatrixXd zeta, double sigma, std::uint64_t seed) {
  if (zeta.rows() < 1 || zeta.cols() < 1)
    throw std::invalid_argument("RFFMap: empty frequency matrix");
  RFFMap map;
  map.zeta_ = std::move(zeta);
  map.sigma_ = sigma;
  map.seed_ = seed;
  map.scale_ = 1.0 / std::sqrt(static_cast<double>(map.zeta_.rows()));
  return map;
}

Eigen::VectorXd RFFMap::apply(const Eigen::VectorXd& x) const {
  if (x.size() != zeta_.cols())
    throw std::invalid_argument("RFFMap::apply: dimension mismatch");
  const Eigen::VectorXd z = zeta_ * x;
  Eigen::VectorXd out(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out(2 * i) = std::cos(z(i)) * scale_;
    out(2 * i + 1) = std::sin(z(i)) * scale_;
  }
  return out;
}

Eigen::MatrixXd RFFMap::apply_batch(const Eigen::MatrixXd& P) const {
  Eigen::MatrixXd cos_z, sin_z;
  return apply_batch(P, cos_z, sin_z);
}

Eigen::MatrixXd RFFMap::apply_batch(const Eigen::MatrixXd& P, Eigen::MatrixXd& cos_out,
                                    Eigen::MatrixXd& sin_out) const {
  if (P.rows() != zeta_.cols())
    throw std::invalid_argument("RFFMap::apply_batch: dimension mismatch");
  const Eigen::MatrixXd Z = zeta_ * P;  // D x B
  cos_out.resize(Z.rows(), Z.cols());
  sin_out.resize(Z.rows(), Z.cols());
  Eigen::MatrixXd out(2 * Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      const double c = std::cos(Z(i, j));
      const double s = std::sin(Z(i, j));
      cos_out(i, j) = c;
      sin_out(i, j) = s;
      out(2 * i, j) = c * scale_;
      out(2 * i + 1, j) = s * scale_;
    }
  return out;
}

Eigen::MatrixXd RFFMap::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != zeta_.cols())
    throw std::invalid_argument("RFFMap::jacobian: dimension mismatch");
  const Eigen::VectorXd z = zeta_ * x;
  Eigen::MatrixXd J(2 * z.size(), zeta_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    J.row(2 * i) = -std::sin(z(i)) * scale_ * zeta_.row(i);
    J.row(2 * i + 1) = std::cos(z(i)) * scale_ * zeta_.row(i);
  }
  return J;
}

Eigen::MatrixXd RFFMap::backprop_batch(const Eigen::MatrixXd& P,
                                       const Eigen::MatrixXd& dPhi) const {
  if (P.rows() != zeta_.cols())
    throw std::invalid_argument("RFFMap::backprop_batch: dimension mismatch");
  Eigen::MatrixXd cos_z, sin_z;
  apply_batch(P, cos_z, sin_z);
  return backprop_cached(cos_z, sin_z, dPhi);
}

Eigen::MatrixXd RFFMap::backprop_cached(const Eigen::MatrixXd& cos_z,
                                        const Eigen::MatrixXd& sin_z,
                                        const Eigen::MatrixXd& dPhi) const {
  if (cos_z.rows() != zeta_.rows() || dPhi.rows() != 2 * zeta_.rows() ||
      dPhi.cols() != cos_z.cols() || sin_z.rows() != cos_z.rows() ||
      sin_z.cols() != cos_z.cols())
    throw std::invalid_argument("RFFMap::backprop_cached: dimension mismatch");
  Eigen::MatrixXd dZ(cos_z.rows(), cos_z.cols());
  for (Eigen::Index j = 0; j < dZ.cols(); ++j)
    for (Eigen::Index i = 0; i < dZ.rows(); ++i)
      dZ(i, j) = scale_ * (-sin_z(i, j) * dPhi(2 * i, j) +
                           cos_z(i, j) * dPhi(2 * i + 1, j));
  return zeta_.transpose() * dZ;
}

}  // namespace nkm
