#include "nkm/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "nkm/rng.hpp"

namespace nkm {

double softmax_cross_entropy(const Eigen::VectorXd& scores, int label) {
  if (label < 0 || label >= scores.size())
    throw std::invalid_argument("softmax_cross_entropy: label out of range");
  const double mx = scores.maxCoeff();
  const double lse = std::log((scores.array() - mx).exp().sum());
  return -(scores(label) - mx - lse);
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd P(scores.rows(), scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    const double mx = scores.col(j).maxCoeff();
    P.col(j) = (scores.col(j).array() - mx).exp();
    P.col(j) /= P.col(j).sum();
  }
  return P;
}

double regularization(const Network& net, double gamma) {
  double sq = 0.0;
  for (const auto& blk : net.blocks) {
    if (blk.freeze) continue;
    for (const auto& t : blk.transforms) sq += t.V.squaredNorm();
    if (blk.pooling == Pooling::Conv) sq += blk.conv_filter.squaredNorm();
  }
  sq += net.W.squaredNorm();
  return gamma * 0.5 * sq;
}

namespace {

double mean_cross_entropy(const Eigen::MatrixXd& scores, const Eigen::VectorXi& labels) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < scores.cols(); ++j)
    total += softmax_cross_entropy(scores.col(j), labels(j));
  return total / static_cast<double>(scores.cols());
}

}  // namespace

double objective(const Network& net, const Eigen::MatrixXd& inputs,
                 const Eigen::VectorXi& labels, double gamma) {
  if (inputs.cols() == 0) throw std::invalid_argument("objective: empty batch");
  if (labels.size() != inputs.cols())
    throw std::invalid_argument("objective: label count mismatch");
  const ForwardCache cache = network_forward(net, inputs);
  return regularization(net, gamma) + mean_cross_entropy(cache.scores, labels);
}

Gradients regularization_gradient(const Network& net, double gamma) {
  Gradients g;
  g.blocks.resize(net.blocks.size());
  for (std::size_t l = 0; l < net.blocks.size(); ++l) {
    const Block& blk = net.blocks[l];
    if (blk.freeze) continue;
    BlockGradients bg;
    for (const auto& t : blk.transforms) {
      bg.V.push_back(gamma * t.V);
      bg.b.push_back(Eigen::VectorXd::Zero(t.b.size()));
    }
    if (blk.pooling == Pooling::Conv) bg.conv_filter = gamma * blk.conv_filter;
    g.blocks[l] = std::move(bg);
  }
  g.W = gamma * net.W;
  g.b = Eigen::VectorXd::Zero(net.b.size());
  return g;
}

BackwardResult backward(const Network& net, const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXi& labels, double gamma) {
  if (inputs.cols() == 0) throw std::invalid_argument("backward: empty batch");
  if (labels.size() != inputs.cols())
    throw std::invalid_argument("backward: label count mismatch");

  const ForwardCache cache = network_forward(net, inputs);
  const auto batch = static_cast<double>(inputs.cols());

  BackwardResult result;
  result.objective = regularization(net, gamma) + mean_cross_entropy(cache.scores, labels);

  // d(mean CE)/d(scores): softmax probabilities minus the one-hot labels.
  Eigen::MatrixXd dScores = softmax_columns(cache.scores);
  for (Eigen::Index j = 0; j < dScores.cols(); ++j) dScores(labels(j), j) -= 1.0;
  dScores /= batch;

  Gradients& g = result.grads;
  g.blocks.resize(net.blocks.size());
  const Eigen::MatrixXd& last_phi = cache.blocks.back().phi;
  g.W = dScores * last_phi.transpose() + gamma * net.W;
  g.b = dScores.rowwise().sum();

  Eigen::MatrixXd dPhi = net.W.transpose() * dScores;

  for (std::size_t l = net.blocks.size(); l-- > 0;) {
    const Block& blk = net.blocks[l];
    const BlockCache& bc = cache.blocks[l];
    const int m = blk.m();

    const Eigen::MatrixXd dPooled = blk.map.backprop_cached(bc.cos_z, bc.sin_z, dPhi);

    // Route the pooled gradient back to the m channels.
    std::vector<Eigen::MatrixXd> dA(static_cast<std::size_t>(m));
    Eigen::VectorXd dFilter;
    switch (blk.pooling) {
      case Pooling::Identity:
        dA[0] = dPooled;
        break;
      case Pooling::Maxout:
        for (int k = 0; k < m; ++k)
          dA[static_cast<std::size_t>(k)] =
              Eigen::MatrixXd::Zero(dPooled.rows(), dPooled.cols());
        for (Eigen::Index j = 0; j < dPooled.cols(); ++j)
          for (Eigen::Index i = 0; i < dPooled.rows(); ++i)
            dA[static_cast<std::size_t>(bc.argmax(i, j))](i, j) = dPooled(i, j);
        break;
      case Pooling::Average:
        for (int k = 0; k < m; ++k)
          dA[static_cast<std::size_t>(k)] = dPooled / static_cast<double>(m);
        break;
      case Pooling::Conv:
        dFilter.resize(m);
        for (int k = 0; k < m; ++k) {
          dA[static_cast<std::size_t>(k)] = blk.conv_filter(k) * dPooled;
          dFilter(k) = dPooled.cwiseProduct(bc.activations[static_cast<std::size_t>(k)]).sum();
        }
        break;
    }

    if (!blk.freeze) {
      BlockGradients bg;
      bg.V.reserve(static_cast<std::size_t>(m));
      bg.b.reserve(static_cast<std::size_t>(m));
      for (int k = 0; k < m; ++k) {
        bg.V.push_back(dA[static_cast<std::size_t>(k)] * bc.input.transpose() +
                       gamma * blk.transforms[static_cast<std::size_t>(k)].V);
        bg.b.push_back(dA[static_cast<std::size_t>(k)].rowwise().sum());
      }
      if (blk.pooling == Pooling::Conv) bg.conv_filter = dFilter + gamma * blk.conv_filter;
      g.blocks[l] = std::move(bg);
    }

    if (l > 0) {
      Eigen::MatrixXd dInput = blk.transforms[0].V.transpose() * dA[0];
      for (int k = 1; k < m; ++k)
        dInput += blk.transforms[static_cast<std::size_t>(k)].V.transpose() *
                  dA[static_cast<std::size_t>(k)];
      dPhi = std::move(dInput);
    }
  }
  return result;
}

void apply_gradients(Network& net, const Gradients& grads, double learning_rate) {
  for (std::size_t l = 0; l < net.blocks.size(); ++l) {
    if (!grads.blocks[l].has_value()) continue;
    Block& blk = net.blocks[l];
    const BlockGradients& bg = *grads.blocks[l];
    for (std::size_t k = 0; k < blk.transforms.size(); ++k) {
      blk.transforms[k].V -= learning_rate * bg.V[k];
      blk.transforms[k].b -= learning_rate * bg.b[k];
    }
    if (bg.conv_filter.size() > 0) blk.conv_filter -= learning_rate * bg.conv_filter;
  }
  net.W -= learning_rate * grads.W;
  net.b -= learning_rate * grads.b;
}

Eigen::MatrixXd to_columns(const Eigen::MatrixXd& rows) { return rows.transpose(); }

TestMetrics evaluate(const Network& net, const Dataset& ds) {
  const ForwardCache cache = network_forward(net, to_columns(ds.X));
  TestMetrics metrics;
  metrics.loss = mean_cross_entropy(cache.scores, ds.y);
  int hits = 0;
  for (Eigen::Index j = 0; j < cache.scores.cols(); ++j)
    if (argmax_lowest(cache.scores.col(j)) == ds.y(j)) ++hits;
  metrics.accuracy = static_cast<double>(hits) / static_cast<double>(ds.rows());
  return metrics;
}

std::pair<Dataset, Dataset> stratified_holdout(const Dataset& ds, double fraction,
                                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("stratified_holdout: fraction must lie in (0,1)");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (Eigen::Index i = 0; i < ds.rows(); ++i)
    by_class[static_cast<std::size_t>(ds.y(i))].push_back(static_cast<int>(i));

  auto rng = make_rng(seed);
  std::vector<int> keep_idx, hold_idx;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    take = std::min(take, members.size() > 0 ? members.size() - 1 : std::size_t{0});
    for (std::size_t i = 0; i < members.size(); ++i)
      (i < take ? hold_idx : keep_idx).push_back(members[i]);
  }
  if (hold_idx.empty()) {
    // Tiny dataset: move one sample of the largest class.
    std::size_t largest = 0;
    for (std::size_t c = 1; c < by_class.size(); ++c)
      if (by_class[c].size() > by_class[largest].size()) largest = c;
    if (by_class[largest].size() < 2)
      throw std::runtime_error("stratified_holdout: not enough data to carve a holdout");
    hold_idx.push_back(keep_idx.back());
    keep_idx.pop_back();
  }
  std::sort(keep_idx.begin(), keep_idx.end());
  std::sort(hold_idx.begin(), hold_idx.end());

  auto take_rows = [&](const std::vector<int>& idx) {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), ds.X.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(idx[i]);
      out.y(static_cast<Eigen::Index>(i)) = ds.y(idx[i]);
    }
    out.num_classes = ds.num_classes;
    out.feature_names = ds.feature_names;
    out.label_names = ds.label_names;
    return out;
  };
  return {take_rows(keep_idx), take_rows(hold_idx)};
}

std::pair<Network, TrainReport> train(const Network& net, const Dataset& train_ds,
                                      const TrainConfig& config, const Dataset* test) {
  const auto t0 = std::chrono::steady_clock::now();

  Network model = net;
  TrainReport report;

  if (config.max_epochs <= 0) {
    report.best_epoch = 0;
    if (test) report.test = evaluate(model, *test);
    return {std::move(model), std::move(report)};
  }

  auto [fit_part, val_part] =
      stratified_holdout(train_ds, config.val_fraction, derive_seed(config.seed, 0xA11));
  {
    std::vector<char> present(static_cast<std::size_t>(fit_part.num_classes), 0);
    for (Eigen::Index i = 0; i < fit_part.rows(); ++i)
      present[static_cast<std::size_t>(fit_part.y(i))] = 1;
    if (std::find(present.begin(), present.end(), 0) != present.end())
      throw std::runtime_error("train: a class is missing from the fitting part");
  }

  const Eigen::MatrixXd fit_cols = to_columns(fit_part.X);
  const Eigen::MatrixXd val_cols = to_columns(val_part.X);
  const auto n_fit = static_cast<int>(fit_part.rows());
  const int batch = std::max(1, std::min(config.batch_size, n_fit));

  EarlyStopping stopper(config.patience);
  Network best = model;
  std::vector<int> order(static_cast<std::size_t>(n_fit));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    auto rng = make_rng(derive_seed(config.seed, 0xE000 + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int seen = 0;
    for (int start = 0; start < n_fit; start += batch) {
      const int count = std::min(batch, n_fit - start);
      Eigen::MatrixXd inputs(fit_cols.rows(), count);
      Eigen::VectorXi labels(count);
      for (int j = 0; j < count; ++j) {
        inputs.col(j) = fit_cols.col(order[static_cast<std::size_t>(start + j)]);
        labels(j) = fit_part.y(order[static_cast<std::size_t>(start + j)]);
      }
      BackwardResult step = backward(model, inputs, labels, config.gamma);
      if (!std::isfinite(step.objective)) throw TrainingDiverged(epoch);
      apply_gradients(model, step.grads, config.learning_rate);
      loss_sum += step.objective * count;
      seen += count;
    }
    report.train_loss.push_back(loss_sum / static_cast<double>(seen));

    const ForwardCache val_cache = network_forward(model, val_cols);
    const double val_loss = mean_cross_entropy(val_cache.scores, val_part.y);
    if (!std::isfinite(val_loss)) throw TrainingDiverged(epoch);
    int hits = 0;
    for (Eigen::Index j = 0; j < val_cache.scores.cols(); ++j)
      if (argmax_lowest(val_cache.scores.col(j)) == val_part.y(j)) ++hits;
    report.val_loss.push_back(val_loss);
    report.val_accuracy.push_back(static_cast<double>(hits) /
                                  static_cast<double>(val_part.rows()));

    if (stopper.observe(val_loss)) best = model;
    if (stopper.stop()) {
      report.stopped_early = true;
      break;
    }
  }

  report.best_epoch = stopper.best_epoch();
  model = std::move(best);
  if (test) report.test = evaluate(model, *test);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(model), std::move(report)};
}

Network stack_network(const Network& base, const std::vector<BlockSpec>& extension,
                      int num_classes, std::uint64_t seed, StackStrategy strategy) {
  Network net;
  net.blocks = base.blocks;
  for (auto& blk : net.blocks) blk.freeze = (strategy == StackStrategy::Freeze);

  int d_in = base.blocks.back().output_dim();
  for (std::size_t l = 0; l < extension.size(); ++l) {
    net.blocks.push_back(make_block(extension[l], d_in, true, derive_seed(seed, 2 * l),
                                    derive_seed(seed, 2 * l + 1)));
    d_in = net.blocks.back().output_dim();
  }

  auto rng = make_rng(derive_seed(seed, 2 * extension.size()));
  const double limit = std::sqrt(6.0 / static_cast<double>(num_classes + d_in));
  std::uniform_real_distribution<double> uni(-limit, limit);
  net.W.resize(num_classes, d_in);
  for (Eigen::Index i = 0; i < net.W.rows(); ++i)
    for (Eigen::Index j = 0; j < net.W.cols(); ++j) net.W(i, j) = uni(rng);
  net.b = Eigen::VectorXd::Zero(num_classes);
  net.validate();
  return net;
}

std::pair<Network, TrainReport> train_stacked(const Network& base,
                                              const std::vector<BlockSpec>& extension,
                                              const Dataset& train_ds,
                                              const TrainConfig& config,
                                              StackStrategy strategy, const Dataset* test) {
  Network stacked = stack_network(base, extension, static_cast<int>(base.b.size()),
                                  derive_seed(config.seed, 0x57ACB), strategy);
  return train(stacked, train_ds, config, test);
}

}  // namespace nkm
