#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nkm/dataset.hpp"
#include "nkm/network.hpp"

namespace nkm {

struct TrainConfig {
  double gamma = 1e-4;        // L2 weight on the regularizer
  double learning_rate = 0.3;
  int batch_size = 32;
  int max_epochs = 200;
  int patience = 20;          // epochs of no validation improvement before stopping
  double val_fraction = 0.2;  // carved from the training set, stratified
  std::uint64_t seed = 1;
};

struct TestMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  int best_epoch = 0;  // 1-based epoch whose parameters were kept
  bool stopped_early = false;
  std::optional<TestMetrics> test;
  double wall_seconds = 0.0;

  int epochs() const { return static_cast<int>(train_loss.size()); }
};

/// Raised when the training loss turns non-finite.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(int epoch_)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch_)),
        epoch(epoch_) {}
  int epoch;
};

/// Tracks the best validation loss; stop() turns true after `patience`
/// consecutive epochs with no improvement of at least min_delta.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience, double min_delta = 1e-6)
      : patience_(patience), min_delta_(min_delta) {}

  /// Feeds one epoch's validation loss; returns true if it improved the best.
  bool observe(double val_loss) {
    ++epoch_;
    if (val_loss < best_ - min_delta_) {
      best_ = val_loss;
      best_epoch_ = epoch_;
      streak_ = 0;
      return true;
    }
    ++streak_;
    return false;
  }

  bool stop() const { return streak_ >= patience_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  double min_delta_;
  int epoch_ = 0;
  int streak_ = 0;
  int best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

/// Numerically stable -log softmax(scores)[label].
double softmax_cross_entropy(const Eigen::VectorXd& scores, int label);

/// Column-wise softmax probabilities.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& scores);

/// gamma * (1/2) sum of squared Frobenius norms of every non-frozen weight
/// matrix and conv filter. Biases are not regularized.
double regularization(const Network& net, double gamma);

/// Full objective on a batch (columns of `inputs`): regularization plus mean
/// cross-entropy.
double objective(const Network& net, const Eigen::MatrixXd& inputs,
                 const Eigen::VectorXi& labels, double gamma);

struct BlockGradients {
  std::vector<Eigen::MatrixXd> V;
  std::vector<Eigen::VectorXd> b;
  Eigen::VectorXd conv_filter;  // size 0 unless conv pooling
};

/// One entry per block; frozen blocks carry no gradients.
struct Gradients {
  std::vector<std::optional<BlockGradients>> blocks;
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct BackwardResult {
  Gradients grads;
  double objective = 0.0;
};

/// Analytic gradient of `objective` for every non-frozen parameter.
BackwardResult backward(const Network& net, const Eigen::MatrixXd& inputs,
                        const Eigen::VectorXi& labels, double gamma);

/// Gradient of the regularization term alone: gamma * V for each non-frozen
/// weight matrix, zero biases.
Gradients regularization_gradient(const Network& net, double gamma);

/// One SGD step: p -= lr * grad for every non-frozen parameter.
void apply_gradients(Network& net, const Gradients& grads, double learning_rate);

/// Minibatch SGD with a seeded shuffle per epoch, a stratified validation
/// carve-out, early stopping on validation loss, and best-checkpoint restore.
/// Reports test metrics when `test` is non-null. Throws TrainingDiverged on
/// non-finite losses.
std::pair<Network, TrainReport> train(const Network& net, const Dataset& train_ds,
                                      const TrainConfig& config,
                                      const Dataset* test = nullptr);

enum class StackStrategy { Freeze, Finetune };

/// New network whose leading blocks copy `base` (frozen or trainable per the
/// strategy) followed by freshly initialized extension blocks and scoring
/// layer. Throws if the extension does not chain onto base's output dim.
Network stack_network(const Network& base, const std::vector<BlockSpec>& extension,
                      int num_classes, std::uint64_t seed, StackStrategy strategy);

/// stack_network followed by train().
std::pair<Network, TrainReport> train_stacked(const Network& base,
                                              const std::vector<BlockSpec>& extension,
                                              const Dataset& train_ds,
                                              const TrainConfig& config,
                                              StackStrategy strategy,
                                              const Dataset* test = nullptr);

/// Deterministic stratified carve: fraction of each class to the second part.
std::pair<Dataset, Dataset> stratified_holdout(const Dataset& ds, double fraction,
                                               std::uint64_t seed);

/// Columns-per-sample view used by the batched network code.
Eigen::MatrixXd to_columns(const Eigen::MatrixXd& rows);

/// Mean cross-entropy and accuracy of the network on a dataset.
TestMetrics evaluate(const Network& net, const Dataset& ds);

}  // namespace nkm
