#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "nkm/rff.hpp"

namespace nkm {

/// One affine transform h -> V h + b.
struct LinearTransform {
  Eigen::MatrixXd V;  // d_out x d_in
  Eigen::VectorXd b;  // d_out
};

enum class Pooling { Identity, Maxout, Average, Conv };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

/// Neural-kernel block: m parallel affine transforms sharing an output
/// dimension, a pooling layer across the m channels, then a frozen RFF map.
///
///   maxout   p_j = max_k (V_k h + b_k)_j     (ties: lowest k)
///   average  p   = (1/m) sum_k (V_k h + b_k)
///   conv     p   = sum_k filter_k (V_k h + b_k)   (pointwise 1x1 conv, one filter)
///   identity p   = V_1 h + b_1                    (requires m == 1)
///
/// Output is map.apply(p), dimension 2 * map.num_features().
struct Block {
  std::vector<LinearTransform> transforms;
  Pooling pooling = Pooling::Identity;
  Eigen::VectorXd conv_filter;  // length m iff pooling == Conv
  RFFMap map;                   // over the pooled vector
  bool freeze = false;

  int m() const { return static_cast<int>(transforms.size()); }
  int input_dim() const { return static_cast<int>(transforms.front().V.cols()); }
  int pooled_dim() const { return static_cast<int>(transforms.front().V.rows()); }
  int output_dim() const { return map.output_dim(); }

  void validate() const;
};

/// Per-block forward record kept for backprop and representation dumps.
/// Columns index batch samples throughout.
struct BlockCache {
  Eigen::MatrixXd input;                   // d_in x B
  std::vector<Eigen::MatrixXd> activations;  // m of d_pool x B
  Eigen::MatrixXd pooled;                  // d_pool x B
  Eigen::MatrixXi argmax;                  // d_pool x B, maxout only
  Eigen::MatrixXd cos_z, sin_z;            // D x B trig values, reused by backprop
  Eigen::MatrixXd phi;                     // 2D x B
};

struct ForwardCache {
  std::vector<BlockCache> blocks;
  Eigen::MatrixXd scores;  // Q x B
};

/// Ordered blocks plus the final affine scoring layer s = W h + b.
struct Network {
  std::vector<Block> blocks;
  Eigen::MatrixXd W;  // Q x (last block output dim)
  Eigen::VectorXd b;  // Q

  int input_dim() const { return blocks.front().input_dim(); }
  int num_classes() const { return static_cast<int>(b.size()); }
  std::size_t parameter_count() const;
  void validate() const;
};

/// Pooled vector + caches for one block applied to a batch (columns).
BlockCache block_forward(const Block& block, const Eigen::MatrixXd& input);

/// Single-sample convenience wrapper of the batched path.
std::pair<Eigen::VectorXd, BlockCache> block_forward(const Block& block,
                                                     const Eigen::VectorXd& h);

/// Full forward pass over a batch (columns). Caches retain every activation.
ForwardCache network_forward(const Network& net, const Eigen::MatrixXd& inputs);

/// Scores for one sample.
std::pair<Eigen::VectorXd, ForwardCache> network_forward(const Network& net,
                                                         const Eigen::VectorXd& x);

/// Smallest index attaining the maximum score.
int predict(const Network& net, const Eigen::VectorXd& x);

/// Argmax per column of a batch.
Eigen::VectorXi predict_batch(const Network& net, const Eigen::MatrixXd& inputs);

int argmax_lowest(const Eigen::VectorXd& scores);

/// Architecture description, resolvable to a Network with build_network.
struct BlockSpec {
  int m = 4;
  int d_out = 100;       // pooled dimension
  int num_features = 50; // RFF frequency count; block output dim = 2 * num_features
  Pooling pooling = Pooling::Maxout;
  double sigma = 0.0;    // <= 0 means sqrt(d_out) at build time
  bool freeze = false;
};

struct NetworkSpec {
  int input_dim = 0;
  int num_classes = 0;
  std::vector<BlockSpec> blocks;
};

/// Bandwidth heuristic: the expected norm of a block's pooled vector under
/// fan-based initialization, sqrt(2 d_in d_out / (d_in + d_out)) * s_in,
/// where the per-coordinate input scale s_in is 1 for standardized features
/// and 1/sqrt(d_in) when the block is fed by a unit-norm RFF vector.
double default_block_sigma(int input_dim, int d_out, bool rff_input);

/// One freshly initialized block: uniform +-sqrt(6/(fan_in+fan_out)) weights,
/// zero biases, conv filter 1/m, RFF map drawn from map_seed. A BlockSpec
/// sigma <= 0 resolves to default_block_sigma.
Block make_block(const BlockSpec& spec, int input_dim, bool rff_input,
                 std::uint64_t weight_seed, std::uint64_t map_seed);

/// Builds a network of freshly initialized blocks plus the scoring layer,
/// with per-block sub-seeds derived from `seed`. Deterministic for a fixed
/// (spec, seed).
Network build_network(const NetworkSpec& spec, std::uint64_t seed);

}  // namespace nkm
