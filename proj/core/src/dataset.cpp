#include "nkm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nkm/rng.hpp"

namespace nkm {

Eigen::MatrixXd StandardizationStats::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size())
    throw std::invalid_argument("standardization stats dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

ColumnSelector ColumnSelector::parse(const std::string& text) {
  if (text.empty() || text == "last") return last();
  int idx = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), idx);
  if (ec == std::errc() && p == text.data() + text.size() && idx >= 0)
    return by_index(idx);
  return by_name(text);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, const std::string& origin,
                    std::size_t row, std::size_t col) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || p != cell.data() + cell.size())
    throw std::runtime_error(origin + ": non-numeric feature value '" + cell +
                             "' at row " + std::to_string(row) + ", column " +
                             std::to_string(col));
  if (!std::isfinite(v))
    throw std::runtime_error(origin + ": non-finite feature value at row " +
                             std::to_string(row) + ", column " + std::to_string(col));
  return v;
}

}  // namespace

Dataset load_csv(std::istream& in, const ColumnSelector& label_column,
                 bool has_header, const std::string& origin) {
  std::string line;
  std::vector<std::string> header;
  if (has_header) {
    if (!std::getline(in, line))
      throw std::runtime_error(origin + ": empty file");
    header = split_fields(line);
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t width = header.size();
  std::size_t lineno = has_header ? 1 : 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw std::runtime_error(origin + ": ragged row at line " +
                               std::to_string(lineno) + " (expected " +
                               std::to_string(width) + " fields, got " +
                               std::to_string(fields.size()) + ")");
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw std::runtime_error(origin + ": no data rows");
  if (width < 2)
    throw std::runtime_error(origin + ": need at least one feature column and a label column");

  std::size_t label_idx = 0;
  switch (label_column.kind) {
    case ColumnSelector::Kind::Last:
      label_idx = width - 1;
      break;
    case ColumnSelector::Kind::Index:
      if (label_column.index < 0 || static_cast<std::size_t>(label_column.index) >= width)
        throw std::runtime_error(origin + ": label column index " +
                                 std::to_string(label_column.index) + " out of range");
      label_idx = static_cast<std::size_t>(label_column.index);
      break;
    case ColumnSelector::Kind::Name: {
      if (!has_header)
        throw std::runtime_error(origin + ": label column by name requires a header row");
      auto it = std::find(header.begin(), header.end(), label_column.name);
      if (it == header.end())
        throw std::runtime_error(origin + ": no header column named '" +
                                 label_column.name + "'");
      label_idx = static_cast<std::size_t>(it - header.begin());
      break;
    }
  }

  const std::size_t n = rows.size();
  const std::size_t d = width - 1;

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(n));

  std::unordered_map<std::string, int> label_ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_idx) continue;
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_number(rows[i][j], origin, i, j);
      ++c;
    }
    const std::string& tok = rows[i][label_idx];
    auto [it, inserted] = label_ids.try_emplace(tok, static_cast<int>(ds.label_names.size()));
    if (inserted) ds.label_names.push_back(tok);
    ds.y(static_cast<Eigen::Index>(i)) = it->second;
  }
  ds.num_classes = static_cast<int>(ds.label_names.size());
  if (ds.num_classes < 2)
    throw std::runtime_error(origin + ": fewer than 2 distinct labels");

  if (!header.empty()) {
    for (std::size_t j = 0; j < width; ++j)
      if (j != label_idx) ds.feature_names.push_back(header[j]);
  }
  return ds;
}

Dataset load_csv(const std::string& path, const ColumnSelector& label_column,
                 bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return load_csv(in, label_column, has_header, path);
}

Eigen::MatrixXd load_features_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (has_header && !std::getline(in, line))
    throw std::runtime_error(path + ": empty file");

  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t lineno = has_header ? 1 : 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw std::runtime_error(path + ": ragged row at line " + std::to_string(lineno));
    std::vector<double> vals(width);
    for (std::size_t j = 0; j < width; ++j)
      vals[j] = parse_number(fields[j], path, rows.size(), j);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return X;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<int>& idx) {
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
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed) {
  const auto n = static_cast<int>(ds.rows());
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0,1)");
  const int n_train = static_cast<int>(std::llround(train_fraction * n));
  if (n_train < 1 || n_train >= n)
    throw std::runtime_error("split would leave an empty train or test part");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  for (int attempt = 0; attempt < 100; ++attempt) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<char> seen(static_cast<std::size_t>(ds.num_classes), 0);
    int classes_seen = 0;
    for (int i = 0; i < n_train; ++i) {
      char& s = seen[static_cast<std::size_t>(ds.y(perm[static_cast<std::size_t>(i)]))];
      if (!s) { s = 1; ++classes_seen; }
    }
    if (classes_seen == ds.num_classes) {
      std::vector<int> tr(perm.begin(), perm.begin() + n_train);
      std::vector<int> te(perm.begin() + n_train, perm.end());
      return {take_rows(ds, tr), take_rows(ds, te)};
    }
  }
  throw std::runtime_error(
      "split: could not place every class in the training part after 100 attempts");
}

std::tuple<Dataset, Dataset, StandardizationStats> standardize(const Dataset& train,
                                                               const Dataset& test) {
  if (train.rows() < 1) throw std::invalid_argument("standardize: empty training set");
  const auto n = static_cast<double>(train.rows());

  StandardizationStats stats;
  stats.mean = train.X.colwise().mean();
  Eigen::MatrixXd centered = train.X.rowwise() - stats.mean.transpose();
  stats.std = (centered.array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index j = 0; j < stats.std.size(); ++j)
    if (stats.std(j) == 0.0) stats.std(j) = 1.0;

  Dataset tr = train;
  Dataset te = test;
  tr.X = stats.apply(train.X);
  te.X = stats.apply(test.X);
  return {std::move(tr), std::move(te), std::move(stats)};
}

}  // namespace nkm
