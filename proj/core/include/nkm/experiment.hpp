#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nkm/dataset.hpp"
#include "nkm/model_io.hpp"
#include "nkm/search.hpp"
#include "nkm/training.hpp"

namespace nkm {

/// Flat key=value configuration ('#' starts a comment). Keys use dotted
/// section names, e.g. blocks.1.m=4. Unknown keys are rejected on use via
/// the typed getters' whitelisting in the pipelines, not here.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<config>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;

  /// Keys in sorted order, one `key=value` line each.
  std::string serialize() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything cmd_train resolves from a config file plus CLI overrides.
struct ExperimentConfig {
  std::string data_path;
  ColumnSelector label_column;
  bool has_header = true;
  double split_fraction = 0.8;
  std::uint64_t split_seed = 42;
  NetworkSpec arch;  // input_dim/num_classes filled after loading data
  TrainConfig train;
  int repeats = 1;

  /// Parses/resolves the architecture and training keys; block sigma defaults
  /// stay 0 here and resolve to sqrt(d_out) at build time.
  static ExperimentConfig from_config(const KeyValueConfig& cfg);

  /// Valid config text reproducing this run (the resolved-config echo).
  KeyValueConfig echo() const;
};

struct TrainRunResult {
  Model model;
  TrainReport report;
  std::string summary_json;
  std::vector<double> repeat_accuracies;
};

/// Full train pipeline: load -> split -> standardize -> build -> train ->
/// evaluate. Writes model.nkm, epochs.csv, summary.json and
/// config_resolved.txt under out_dir (per-repeat subdirectories when
/// repeats > 1). out_dir is created if missing.
TrainRunResult run_train(const ExperimentConfig& cfg, const std::string& out_dir);

/// Scores every row of data_path with a saved model. Writes predictions.csv
/// (original label spellings + class probabilities) and scores.csv
/// (pre-softmax scores) under out_dir. A label column, when named, is only
/// stripped, never required.
void run_predict(const std::string& model_path, const std::string& data_path,
                 const std::optional<ColumnSelector>& label_column, bool has_header,
                 const std::string& out_dir);

/// Per-layer representation dump: one CSV per tap point
/// (block_<i>.lin_<k>, block_<i>.pooled, block_<i>.phi, scores), rows aligned
/// with input rows. Returns the tap file names written.
std::vector<std::string> run_dump_reprs(const std::string& model_path,
                                        const std::string& data_path,
                                        const std::optional<ColumnSelector>& label_column,
                                        bool has_header, const std::string& out_dir);

struct BaselineResult {
  double dual_test_accuracy = 0.0;
  double primal_test_accuracy = 0.0;
  double agreement = 0.0;
  std::string summary_json;
};

/// Dual LS-SVM vs primal LS-SVM over a Nystrom map on a binary dataset.
/// Refuses non-binary datasets and n > 20000 (dense solve guard).
BaselineResult run_baseline(const KeyValueConfig& cfg, const std::string& out_dir);

struct SearchRunResult {
  SearchResult search;
  std::string summary_json;
};

/// random_search over the architecture skeleton in the config; writes
/// search_log.csv, best_config.txt and summary.json.
SearchRunResult run_search(const KeyValueConfig& cfg, const std::string& out_dir);

}  // namespace nkm
