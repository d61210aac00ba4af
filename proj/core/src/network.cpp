#include "nkm/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nkm/rng.hpp"

namespace nkm {

std::string to_string(Pooling p) {
  switch (p) {
    case Pooling::Identity: return "identity";
    case Pooling::Maxout: return "maxout";
    case Pooling::Average: return "average";
    case Pooling::Conv: return "conv";
  }
  return "?";
}

Pooling pooling_from_string(const std::string& s) {
  if (s == "identity" || s == "hybrid") return Pooling::Identity;
  if (s == "maxout") return Pooling::Maxout;
  if (s == "average") return Pooling::Average;
  if (s == "conv") return Pooling::Conv;
  throw std::invalid_argument("unknown pooling kind: " + s);
}

void Block::validate() const {
  if (transforms.empty()) throw std::invalid_argument("block has no transforms");
  const auto d_out = transforms.front().V.rows();
  const auto d_in = transforms.front().V.cols();
  for (const auto& t : transforms)
    if (t.V.rows() != d_out || t.V.cols() != d_in || t.b.size() != d_out)
      throw std::invalid_argument("block transforms disagree on dimensions");
  if (pooling == Pooling::Identity && transforms.size() != 1)
    throw std::invalid_argument("identity pooling requires exactly one transform");
  if (pooling == Pooling::Conv && conv_filter.size() != static_cast<Eigen::Index>(transforms.size()))
    throw std::invalid_argument("conv filter length must equal the transform count");
  if (map.input_dim() != d_out)
    throw std::invalid_argument("feature map input dim must equal the pooled dim");
}

void Network::validate() const {
  if (blocks.empty()) throw std::invalid_argument("network has no blocks");
  for (const auto& blk : blocks) blk.validate();
  for (std::size_t i = 1; i < blocks.size(); ++i)
    if (blocks[i].input_dim() != blocks[i - 1].output_dim())
      throw std::invalid_argument("block dimension chain broken at block " + std::to_string(i));
  if (W.cols() != blocks.back().output_dim() || W.rows() != b.size())
    throw std::invalid_argument("scoring layer dimensions do not match the last block");
}

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const auto& blk : blocks) {
    for (const auto& t : blk.transforms)
      count += static_cast<std::size_t>(t.V.size() + t.b.size());
    count += static_cast<std::size_t>(blk.conv_filter.size());
  }
  count += static_cast<std::size_t>(W.size() + b.size());
  return count;
}

BlockCache block_forward(const Block& block, const Eigen::MatrixXd& input) {
  if (input.rows() != block.input_dim())
    throw std::invalid_argument("block_forward: input dimension mismatch");

  BlockCache cache;
  cache.input = input;
  const int m = block.m();
  cache.activations.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k)
    cache.activations.push_back(
        (block.transforms[static_cast<std::size_t>(k)].V * input).colwise() +
        block.transforms[static_cast<std::size_t>(k)].b);

  switch (block.pooling) {
    case Pooling::Identity:
      cache.pooled = cache.activations[0];
      break;
    case Pooling::Maxout: {
      cache.pooled = cache.activations[0];
      cache.argmax = Eigen::MatrixXi::Zero(cache.pooled.rows(), cache.pooled.cols());
      for (int k = 1; k < m; ++k) {
        const auto& a = cache.activations[static_cast<std::size_t>(k)];
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (a(i, j) > cache.pooled(i, j)) {  // strict: ties keep the lowest k
              cache.pooled(i, j) = a(i, j);
              cache.argmax(i, j) = k;
            }
      }
      break;
    }
    case Pooling::Average: {
      Eigen::MatrixXd sum = cache.activations[0];
      for (int k = 1; k < m; ++k) sum += cache.activations[static_cast<std::size_t>(k)];
      cache.pooled = sum / static_cast<double>(m);
      break;
    }
    case Pooling::Conv: {
      cache.pooled = block.conv_filter(0) * cache.activations[0];
      for (int k = 1; k < m; ++k)
        cache.pooled += block.conv_filter(k) * cache.activations[static_cast<std::size_t>(k)];
      break;
    }
  }

  cache.phi = block.map.apply_batch(cache.pooled, cache.cos_z, cache.sin_z);
  return cache;
}

std::pair<Eigen::VectorXd, BlockCache> block_forward(const Block& block,
                                                     const Eigen::VectorXd& h) {
  BlockCache cache = block_forward(block, Eigen::MatrixXd(h));
  return {cache.phi.col(0), std::move(cache)};
}

ForwardCache network_forward(const Network& net, const Eigen::MatrixXd& inputs) {
  ForwardCache cache;
  cache.blocks.reserve(net.blocks.size());
  const Eigen::MatrixXd* h = &inputs;
  for (const auto& blk : net.blocks) {
    cache.blocks.push_back(block_forward(blk, *h));
    h = &cache.blocks.back().phi;
  }
  cache.scores = (net.W * (*h)).colwise() + net.b;
  return cache;
}

std::pair<Eigen::VectorXd, ForwardCache> network_forward(const Network& net,
                                                         const Eigen::VectorXd& x) {
  ForwardCache cache = network_forward(net, Eigen::MatrixXd(x));
  return {cache.scores.col(0), std::move(cache)};
}

int argmax_lowest(const Eigen::VectorXd& scores) {
  int best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = static_cast<int>(i);
  return best;
}

int predict(const Network& net, const Eigen::VectorXd& x) {
  return argmax_lowest(network_forward(net, x).first);
}

Eigen::VectorXi predict_batch(const Network& net, const Eigen::MatrixXd& inputs) {
  const ForwardCache cache = network_forward(net, inputs);
  Eigen::VectorXi out(cache.scores.cols());
  for (Eigen::Index j = 0; j < cache.scores.cols(); ++j)
    out(j) = argmax_lowest(cache.scores.col(j));
  return out;
}

namespace {

Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> uni(-limit, limit);
  Eigen::MatrixXd W(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) W(i, j) = uni(rng);
  return W;
}

}  // namespace

double default_block_sigma(int input_dim, int d_out, bool rff_input) {
  const double di = input_dim, dp = d_out;
  const double input_scale = rff_input ? 1.0 / std::sqrt(di) : 1.0;
  return std::sqrt(2.0 * di * dp / (di + dp)) * input_scale;
}

Block make_block(const BlockSpec& spec, int input_dim, bool rff_input,
                 std::uint64_t weight_seed, std::uint64_t map_seed) {
  if (spec.m < 1 || spec.d_out < 1 || spec.num_features < 1)
    throw std::invalid_argument("make_block: block dimensions must be >= 1");
  if (spec.pooling == Pooling::Identity && spec.m != 1)
    throw std::invalid_argument("make_block: identity pooling requires m == 1");

  auto rng = make_rng(weight_seed);
  Block blk;
  blk.pooling = spec.pooling;
  blk.freeze = spec.freeze;
  blk.transforms.resize(static_cast<std::size_t>(spec.m));
  for (auto& t : blk.transforms) {
    t.V = glorot_uniform(spec.d_out, input_dim, rng);
    t.b = Eigen::VectorXd::Zero(spec.d_out);
  }
  if (spec.pooling == Pooling::Conv)
    blk.conv_filter = Eigen::VectorXd::Constant(spec.m, 1.0 / static_cast<double>(spec.m));

  const double sigma = spec.sigma > 0.0
                           ? spec.sigma
                           : default_block_sigma(input_dim, spec.d_out, rff_input);
  blk.map = RFFMap::create(spec.d_out, spec.num_features, sigma, map_seed);
  return blk;
}

Network build_network(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.input_dim < 1) throw std::invalid_argument("build_network: input_dim must be >= 1");
  if (spec.num_classes < 2) throw std::invalid_argument("build_network: need >= 2 classes");
  if (spec.blocks.empty()) throw std::invalid_argument("build_network: need >= 1 block");

  Network net;
  int d_in = spec.input_dim;
  for (std::size_t l = 0; l < spec.blocks.size(); ++l) {
    net.blocks.push_back(make_block(spec.blocks[l], d_in, l > 0, derive_seed(seed, 2 * l),
                                    derive_seed(seed, 2 * l + 1)));
    d_in = net.blocks.back().output_dim();
  }

  auto rng = make_rng(derive_seed(seed, 2 * spec.blocks.size()));
  net.W = glorot_uniform(spec.num_classes, d_in, rng);
  net.b = Eigen::VectorXd::Zero(spec.num_classes);
  net.validate();
  return net;
}

}  // namespace nkm
