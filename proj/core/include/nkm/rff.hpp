#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace nkm {

/// Random Fourier feature map for the Gaussian kernel.
///
/// Frequencies are drawn once from N(0, I/sigma^2) and stay frozen; features
/// are the interleaved pairs [cos(z_1^T x), sin(z_1^T x), ...] / sqrt(D), so
/// the output dimension is 2*num_features and <phi(x), phi(y)> is an unbiased
/// estimate of exp(-||x-y||^2 / (2 sigma^2)).
class RFFMap {
 public:
  RFFMap() = default;

  /// Deterministic for a fixed (input_dim, num_features, sigma, seed).
  static RFFMap create(int input_dim, int num_features, double sigma, std::uint64_t seed);

  /// Rebuilds a map from a stored frequency matrix (deserialization).
  static RFFMap from_frequencies(Eigen::MatrixXd zeta, double sigma, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(zeta_.cols()); }
  int num_features() const { return static_cast<int>(zeta_.rows()); }
  int output_dim() const { return 2 * num_features(); }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& frequencies() const { return zeta_; }

  /// phi(x), length 2D, every entry in [-1/sqrt(D), 1/sqrt(D)].
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  /// Column-per-sample batch: P is input_dim x B, result 2D x B. The second
  /// form also hands out the raw cos/sin values (D x B each) so a training
  /// step can reuse them in backprop_cached instead of recomputing.
  Eigen::MatrixXd apply_batch(const Eigen::MatrixXd& P) const;
  Eigen::MatrixXd apply_batch(const Eigen::MatrixXd& P, Eigen::MatrixXd& cos_out,
                              Eigen::MatrixXd& sin_out) const;

  /// Jacobian d phi / d x, shape 2D x input_dim:
  /// row 2i   = -sin(z_i^T x) z_i / sqrt(D)
  /// row 2i+1 =  cos(z_i^T x) z_i / sqrt(D)
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

  /// Batched reverse-mode step: given upstream gradients dPhi (2D x B) and the
  /// forward inputs P (input_dim x B), returns dP (input_dim x B).
  Eigen::MatrixXd backprop_batch(const Eigen::MatrixXd& P, const Eigen::MatrixXd& dPhi) const;

  /// Same, reusing the trig values captured during the forward pass.
  Eigen::MatrixXd backprop_cached(const Eigen::MatrixXd& cos_z, const Eigen::MatrixXd& sin_z,
                                  const Eigen::MatrixXd& dPhi) const;

 private:
  Eigen::MatrixXd zeta_;  // D x input_dim
  double sigma_ = 1.0;
  std::uint64_t seed_ = 0;
  double scale_ = 1.0;  // 1/sqrt(D)
};

}  // namespace nkm
