#include "nkm/search.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nkm/rng.hpp"

namespace nkm {

SearchResult random_search(const NetworkSpec& skeleton, const SearchSpace& space,
                           int budget, const Dataset& train_ds, const TrainConfig& config) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  if (space.dim_lo < 1 || space.dim_hi < space.dim_lo || space.features_lo < 1 ||
      space.features_hi < space.features_lo)
    throw std::invalid_argument("random_search: malformed search space");

  auto rng = make_rng(derive_seed(space.seed, 0x5EA7C4));
  std::uniform_int_distribution<int> dim_dist(space.dim_lo, space.dim_hi);
  std::uniform_int_distribution<int> feat_dist(space.features_lo, space.features_hi);
  std::uniform_real_distribution<double> scale_dist(space.sigma_scale_lo,
                                                    space.sigma_scale_hi);

  SearchResult result;
  result.trials.reserve(static_cast<std::size_t>(budget));

  for (int t = 0; t < budget; ++t) {
    SearchTrial trial;
    trial.spec = skeleton;
    int d_in = skeleton.input_dim;
    for (std::size_t l = 0; l < trial.spec.blocks.size(); ++l) {
      BlockSpec& bs = trial.spec.blocks[l];
      bs.d_out = dim_dist(rng);
      bs.num_features = feat_dist(rng);
      bs.sigma = scale_dist(rng) * default_block_sigma(d_in, bs.d_out, l > 0);
      d_in = 2 * bs.num_features;
    }

    try {
      Network net = build_network(trial.spec,
                                  derive_seed(space.seed, 1000 + static_cast<std::uint64_t>(t)));
      auto [trained, report] = train(net, train_ds, config);
      (void)trained;
      trial.val_loss = report.epochs() > 0 ? report.val_loss[static_cast<std::size_t>(
                                                 report.best_epoch - 1)]
                                           : std::numeric_limits<double>::infinity();
      trial.val_accuracy = report.epochs() > 0
                               ? report.val_accuracy[static_cast<std::size_t>(
                                     report.best_epoch - 1)]
                               : -1.0;
      trial.best_epoch = report.best_epoch;
      trial.epochs = report.epochs();
    } catch (const TrainingDiverged&) {
      trial.diverged = true;
    }
    result.trials.push_back(std::move(trial));

    const SearchTrial& cur = result.trials.back();
    if (cur.diverged) continue;
    if (result.best_index < 0) {
      result.best_index = t;
      continue;
    }
    const SearchTrial& best = result.trials[static_cast<std::size_t>(result.best_index)];
    if (cur.val_accuracy > best.val_accuracy ||
        (cur.val_accuracy == best.val_accuracy && cur.val_loss < best.val_loss))
      result.best_index = t;
  }

  if (result.best_index < 0)
    throw std::runtime_error("random_search: every trial diverged");
  result.best_spec = result.trials[static_cast<std::size_t>(result.best_index)].spec;
  return result;
}

}  // namespace nkm
