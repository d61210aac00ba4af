#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nkm {

/// Labeled feature matrix. Labels are contiguous integers 0..num_classes-1;
/// `label_names[k]` is the original spelling of class k (first-appearance
/// order). Immutable by convention once built.
struct Dataset {
  Eigen::MatrixXd X;                       // n x d, one row per instance
  Eigen::VectorXi y;                       // n, values in [0, num_classes)
  int num_classes = 0;
  std::vector<std::string> feature_names;  // empty when the file had no header
  std::vector<std::string> label_names;    // size num_classes

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

/// Per-feature mean/std fitted on a training set. Stds of constant features
/// are stored as 1 so applying the stats leaves those features unchanged.
struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// Selects the label column of a CSV file: by 0-based index, by header name,
/// or the last column.
struct ColumnSelector {
  enum class Kind { Last, Index, Name };
  Kind kind = Kind::Last;
  int index = -1;
  std::string name;

  static ColumnSelector last() { return {}; }
  static ColumnSelector by_index(int i) { return {Kind::Index, i, {}}; }
  static ColumnSelector by_name(std::string n) { return {Kind::Name, -1, std::move(n)}; }
  /// "last", a non-negative integer, or a header name.
  static ColumnSelector parse(const std::string& text);
};

/// Reads a comma-separated file with numeric feature columns and one label
/// column. Labels are re-encoded to 0..Q-1 in first-appearance order; row
/// order is preserved. Throws std::runtime_error on I/O failure, ragged rows,
/// non-numeric or non-finite feature cells, or fewer than 2 distinct labels.
Dataset load_csv(const std::string& path, const ColumnSelector& label_column,
                 bool has_header = true);

/// Same, reading from a stream (`origin` only names the source in errors).
Dataset load_csv(std::istream& in, const ColumnSelector& label_column,
                 bool has_header = true, const std::string& origin = "<stream>");

/// Feature-only CSV (no label column); used by predict on unlabeled data.
Eigen::MatrixXd load_features_csv(const std::string& path, bool has_header = true);

/// Seeded random row partition with |train| = round(train_fraction * n).
/// Permutations are re-drawn (up to 100 deterministic retries) until the
/// training part contains every class; throws if that never happens or if
/// either part would be empty.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed);

/// Z-scores both sets with stats fitted on `train` only. Constant features
/// pass through unchanged.
std::tuple<Dataset, Dataset, StandardizationStats> standardize(const Dataset& train,
                                                               const Dataset& test);

}  // namespace nkm
