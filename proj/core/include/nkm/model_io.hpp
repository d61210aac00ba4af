#pragma once

#include <string>
#include <vector>

#include "nkm/dataset.hpp"
#include "nkm/network.hpp"
#include "nkm/nystrom.hpp"

namespace nkm {

/// A trained network bundled with everything needed to score raw CSV rows:
/// the standardization stats fitted at training time and the label-encoding
/// table mapping class indices back to the original label spellings.
struct Model {
  Network net;
  StandardizationStats stats;
  std::vector<std::string> label_names;
};

/// Binary model container, versioned, magic "NKM1". All integers and IEEE-754
/// doubles are little-endian; matrix payloads are row-major. Loading a saved
/// model reproduces predictions bitwise.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// Stand-alone feature-map serialization (the same layout the model container
/// embeds): header {type, dims, sigma, seed} + row-major 64-bit payload.
void save_rff_map(const std::string& path, const RFFMap& map);
RFFMap load_rff_map(const std::string& path);
void save_nystrom_map(const std::string& path, const NystromMap& map);
NystromMap load_nystrom_map(const std::string& path);

}  // namespace nkm
