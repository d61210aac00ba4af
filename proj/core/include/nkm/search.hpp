#pragma once

#include <cstdint>
#include <vector>

#include "nkm/dataset.hpp"
#include "nkm/network.hpp"
#include "nkm/training.hpp"

namespace nkm {

/// Ranges sampled per block by random_search. sigma is drawn as a multiple
/// of default_block_sigma (the init-time pooled-norm estimate), so one range
/// works for blocks of different widths and input scales.
struct SearchSpace {
  int dim_lo = 50;
  int dim_hi = 600;
  int features_lo = 25;   // RFF frequency count; block output dim = 2 * features
  int features_hi = 300;
  double sigma_scale_lo = 0.25;
  double sigma_scale_hi = 4.0;
  std::uint64_t seed = 7;
};

struct SearchTrial {
  NetworkSpec spec;
  double val_accuracy = -1.0;
  double val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs = 0;
  bool diverged = false;
};

struct SearchResult {
  NetworkSpec best_spec;
  int best_index = -1;
  std::vector<SearchTrial> trials;
};

/// Draws `budget` architectures uniformly from the space (block count, m,
/// pooling and freeze come from the skeleton), trains each, and returns the
/// one with the best validation accuracy. Ties break on lower validation
/// loss, then on the earlier draw. Throws if every trial diverged.
SearchResult random_search(const NetworkSpec& skeleton, const SearchSpace& space,
                           int budget, const Dataset& train_ds, const TrainConfig& config);

}  // namespace nkm
