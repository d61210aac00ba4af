#include "nkm/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nkm/kernel.hpp"
#include "nkm/lssvm.hpp"
#include "nkm/nystrom.hpp"
#include "nkm/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace nkm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// %.17g round-trips doubles exactly and keeps text output deterministic.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_text(const std::string& text, const std::string& origin) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  int v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size())
    throw std::runtime_error("config key '" + key + "': expected integer, got '" +
                             it->second + "'");
  return v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = 0.0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size())
    throw std::runtime_error("config key '" + key + "': expected number, got '" +
                             it->second + "'");
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected true/false, got '" +
                           it->second + "'");
}

std::uint64_t KeyValueConfig::get_seed(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || p != it->second.data() + it->second.size())
    throw std::runtime_error("config key '" + key + "': expected seed, got '" + it->second + "'");
  return v;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& cfg) {
  ExperimentConfig ec;
  ec.data_path = cfg.get("data.path", "");
  if (ec.data_path.empty()) throw std::runtime_error("config: data.path is required");
  ec.label_column = ColumnSelector::parse(cfg.get("data.label_column", "last"));
  ec.has_header = cfg.get_bool("data.has_header", true);
  ec.split_fraction = cfg.get_double("split.fraction", 0.8);
  ec.split_seed = cfg.get_seed("split.seed", 42);

  const int n_blocks = cfg.get_int("arch.blocks", 2);
  if (n_blocks < 1) throw std::runtime_error("config: arch.blocks must be >= 1");
  const std::string default_pooling = cfg.get("arch.pooling", "maxout");
  for (int i = 1; i <= n_blocks; ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    BlockSpec bs;
    bs.pooling = pooling_from_string(cfg.get(prefix + "pooling", default_pooling));
    bs.m = cfg.get_int(prefix + "m", bs.pooling == Pooling::Identity ? 1 : 4);
    bs.d_out = cfg.get_int(prefix + "d_out", 100);
    // canonical key "D"; "features" accepted as an alias
    bs.num_features =
        cfg.get_int(prefix + "D", cfg.get_int(prefix + "features", (bs.d_out + 1) / 2));
    bs.sigma = cfg.get_double(prefix + "sigma", 0.0);
    bs.freeze = cfg.get_bool(prefix + "freeze", false);
    ec.arch.blocks.push_back(bs);
  }

  ec.train.gamma = cfg.get_double("train.gamma", 1e-4);
  ec.train.learning_rate = cfg.get_double("train.lr", 0.3);
  ec.train.batch_size = cfg.get_int("train.batch", 32);
  ec.train.max_epochs = cfg.get_int("train.epochs", 200);
  ec.train.patience = cfg.get_int("train.patience", 20);
  ec.train.val_fraction = cfg.get_double("train.val_fraction", 0.2);
  ec.train.seed = cfg.get_seed("train.seed", 1);
  ec.repeats = cfg.get_int("repeats", 1);
  if (ec.repeats < 1) throw std::runtime_error("config: repeats must be >= 1");
  return ec;
}

KeyValueConfig ExperimentConfig::echo() const {
  KeyValueConfig cfg;
  cfg.set("data.path", data_path);
  switch (label_column.kind) {
    case ColumnSelector::Kind::Last: cfg.set("data.label_column", "last"); break;
    case ColumnSelector::Kind::Index:
      cfg.set("data.label_column", std::to_string(label_column.index));
      break;
    case ColumnSelector::Kind::Name: cfg.set("data.label_column", label_column.name); break;
  }
  cfg.set("data.has_header", has_header ? "true" : "false");
  cfg.set("split.fraction", fmt(split_fraction));
  cfg.set("split.seed", std::to_string(split_seed));
  cfg.set("arch.blocks", std::to_string(arch.blocks.size()));
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i + 1) + ".";
    const BlockSpec& bs = arch.blocks[i];
    cfg.set(prefix + "pooling", to_string(bs.pooling));
    cfg.set(prefix + "m", std::to_string(bs.m));
    cfg.set(prefix + "d_out", std::to_string(bs.d_out));
    cfg.set(prefix + "D", std::to_string(bs.num_features));
    // 0 = resolve to default_block_sigma at build time; reproducible either way.
    cfg.set(prefix + "sigma", bs.sigma > 0.0 ? fmt(bs.sigma) : "0");
    cfg.set(prefix + "freeze", bs.freeze ? "true" : "false");
  }
  cfg.set("train.gamma", fmt(train.gamma));
  cfg.set("train.lr", fmt(train.learning_rate));
  cfg.set("train.batch", std::to_string(train.batch_size));
  cfg.set("train.epochs", std::to_string(train.max_epochs));
  cfg.set("train.patience", std::to_string(train.patience));
  cfg.set("train.val_fraction", fmt(train.val_fraction));
  cfg.set("train.seed", std::to_string(train.seed));
  cfg.set("repeats", std::to_string(repeats));
  return cfg;
}

namespace {

std::string epochs_csv(const TrainReport& report) {
  std::string out = "epoch,train_loss,val_loss,val_acc\n";
  for (int e = 0; e < report.epochs(); ++e) {
    out += std::to_string(e + 1);
    out += ',';
    out += fmt(report.train_loss[static_cast<std::size_t>(e)]);
    out += ',';
    out += fmt(report.val_loss[static_cast<std::size_t>(e)]);
    out += ',';
    out += fmt(report.val_accuracy[static_cast<std::size_t>(e)]);
    out += '\n';
  }
  return out;
}

struct SingleRun {
  Model model;
  TrainReport report;
};

SingleRun train_once(const ExperimentConfig& cfg, const Dataset& full,
                     std::uint64_t split_seed, std::uint64_t train_seed) {
  auto [train_raw, test_raw] = split(full, cfg.split_fraction, split_seed);
  auto [train_std, test_std, stats] = standardize(train_raw, test_raw);

  NetworkSpec spec = cfg.arch;
  spec.input_dim = static_cast<int>(full.dim());
  spec.num_classes = full.num_classes;

  TrainConfig tc = cfg.train;
  tc.seed = train_seed;
  Network net = build_network(spec, derive_seed(train_seed, 0xB01D));
  auto [trained, report] = train(net, train_std, tc, &test_std);

  SingleRun run;
  run.model.net = std::move(trained);
  run.model.stats = std::move(stats);
  run.model.label_names = full.label_names;
  run.report = std::move(report);
  return run;
}

json run_summary(const SingleRun& run) {
  json j;
  j["test_accuracy"] = run.report.test ? run.report.test->accuracy : -1.0;
  j["test_loss"] = run.report.test ? run.report.test->loss : -1.0;
  j["best_epoch"] = run.report.best_epoch;
  j["epochs_run"] = run.report.epochs();
  j["stopped_early"] = run.report.stopped_early;
  j["params_count"] = run.model.net.parameter_count();
  if (run.report.best_epoch > 0) {
    j["val_loss"] = run.report.val_loss[static_cast<std::size_t>(run.report.best_epoch - 1)];
    j["val_accuracy"] =
        run.report.val_accuracy[static_cast<std::size_t>(run.report.best_epoch - 1)];
  }
  return j;
}

}  // namespace

TrainRunResult run_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Dataset full = load_csv(cfg.data_path, cfg.label_column, cfg.has_header);

  TrainRunResult result;
  json summary;
  double wall_total = 0.0;

  if (cfg.repeats == 1) {
    SingleRun run = train_once(cfg, full, cfg.split_seed, cfg.train.seed);
    wall_total = run.report.wall_seconds;
    summary = run_summary(run);
    result.repeat_accuracies.push_back(run.report.test->accuracy);
    save_model(out_dir + "/model.nkm", run.model);
    write_file(out_dir + "/epochs.csv", epochs_csv(run.report));
    result.model = std::move(run.model);
    result.report = std::move(run.report);
  } else {
    json per_repeat = json::array();
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < cfg.repeats; ++r) {
      const std::string sub = out_dir + "/repeat_" + std::to_string(r + 1);
      fs::create_directories(sub);
      SingleRun run = train_once(cfg, full, cfg.split_seed + static_cast<std::uint64_t>(r),
                                 cfg.train.seed + static_cast<std::uint64_t>(r));
      wall_total += run.report.wall_seconds;
      const double acc = run.report.test->accuracy;
      sum += acc;
      sumsq += acc * acc;
      result.repeat_accuracies.push_back(acc);
      per_repeat.push_back(run_summary(run));
      save_model(sub + "/model.nkm", run.model);
      write_file(sub + "/epochs.csv", epochs_csv(run.report));
      if (r == 0) {
        result.model = std::move(run.model);
        result.report = std::move(run.report);
      }
    }
    const double n = cfg.repeats;
    const double mean = sum / n;
    summary["repeats"] = cfg.repeats;
    summary["test_accuracy_mean"] = mean;
    summary["test_accuracy_std"] = std::sqrt(std::max(0.0, sumsq / n - mean * mean));
    summary["per_repeat"] = per_repeat;
    summary["params_count"] = result.model.net.parameter_count();
    summary["test_accuracy"] = mean;
  }

  write_file(out_dir + "/config_resolved.txt", cfg.echo().serialize());

  // Timing goes last so the deterministic prefix of the file is stable.
  summary["train_seconds"] = wall_total;
  result.summary_json = summary.dump(2);
  write_file(out_dir + "/summary.json", result.summary_json + "\n");
  return result;
}

namespace {

Eigen::MatrixXd load_for_model(const Model& model, const std::string& data_path,
                               const std::optional<ColumnSelector>& label_column,
                               bool has_header) {
  Eigen::MatrixXd X;
  if (label_column) {
    X = load_csv(data_path, *label_column, has_header).X;
  } else {
    X = load_features_csv(data_path, has_header);
  }
  const auto expected = model.net.input_dim();
  if (X.cols() != expected)
    throw std::runtime_error("feature dimension mismatch: model expects " +
                             std::to_string(expected) + " features, data has " +
                             std::to_string(X.cols()));
  return X;
}

std::string matrix_csv(const Eigen::MatrixXd& rows) {
  std::string out;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (j) out += ',';
      out += fmt(rows(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void run_predict(const std::string& model_path, const std::string& data_path,
                 const std::optional<ColumnSelector>& label_column, bool has_header,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Model model = load_model(model_path);
  const Eigen::MatrixXd raw = load_for_model(model, data_path, label_column, has_header);

  const Eigen::MatrixXd inputs = to_columns(model.stats.apply(raw));
  const ForwardCache cache = network_forward(model.net, inputs);
  const Eigen::MatrixXd probs = softmax_columns(cache.scores);

  std::string pred = "row,label";
  for (int q = 0; q < model.net.num_classes(); ++q)
    pred += ",prob_" + std::to_string(q);
  pred += '\n';
  for (Eigen::Index j = 0; j < cache.scores.cols(); ++j) {
    pred += std::to_string(j);
    pred += ',';
    pred += model.label_names[static_cast<std::size_t>(argmax_lowest(cache.scores.col(j)))];
    for (Eigen::Index q = 0; q < probs.rows(); ++q) {
      pred += ',';
      pred += fmt(probs(q, j));
    }
    pred += '\n';
  }
  write_file(out_dir + "/predictions.csv", pred);
  write_file(out_dir + "/scores.csv", matrix_csv(cache.scores.transpose()));
}

std::vector<std::string> run_dump_reprs(const std::string& model_path,
                                        const std::string& data_path,
                                        const std::optional<ColumnSelector>& label_column,
                                        bool has_header, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Model model = load_model(model_path);
  const Eigen::MatrixXd raw = load_for_model(model, data_path, label_column, has_header);

  const Eigen::MatrixXd inputs = to_columns(model.stats.apply(raw));
  const ForwardCache cache = network_forward(model.net, inputs);

  std::vector<std::string> taps;
  for (std::size_t l = 0; l < cache.blocks.size(); ++l) {
    const std::string base = "block_" + std::to_string(l + 1);
    const BlockCache& bc = cache.blocks[l];
    for (std::size_t k = 0; k < bc.activations.size(); ++k) {
      const std::string name = base + ".lin_" + std::to_string(k + 1);
      write_file(out_dir + "/" + name + ".csv", matrix_csv(bc.activations[k].transpose()));
      taps.push_back(name);
    }
    write_file(out_dir + "/" + base + ".pooled.csv", matrix_csv(bc.pooled.transpose()));
    taps.push_back(base + ".pooled");
    write_file(out_dir + "/" + base + ".phi.csv", matrix_csv(bc.phi.transpose()));
    taps.push_back(base + ".phi");
  }
  write_file(out_dir + "/scores.csv", matrix_csv(cache.scores.transpose()));
  taps.push_back("scores");
  return taps;
}

BaselineResult run_baseline(const KeyValueConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string path = cfg.get("data.path", "");
  if (path.empty()) throw std::runtime_error("config: data.path is required");
  const Dataset full = load_csv(path, ColumnSelector::parse(cfg.get("data.label_column", "last")),
                                cfg.get_bool("data.has_header", true));
  if (full.num_classes != 2)
    throw std::runtime_error("baseline requires a binary dataset; '" + path + "' has " +
                             std::to_string(full.num_classes) + " classes");
  if (full.rows() > 20000)
    throw std::runtime_error("baseline dense solve guard: n = " +
                             std::to_string(full.rows()) + " exceeds 20000");

  auto [train_raw, test_raw] = split(full, cfg.get_double("split.fraction", 0.8),
                                     cfg.get_seed("split.seed", 42));
  auto [train_std, test_std, stats] = standardize(train_raw, test_raw);
  (void)stats;

  const double sigma = cfg.get_double(
      "baseline.sigma", std::sqrt(static_cast<double>(train_std.dim())));
  const double gamma = cfg.get_double("baseline.gamma", 1.0);
  int prototypes = cfg.get_int("baseline.prototypes", 0);
  if (prototypes <= 0 || prototypes > train_std.rows())
    prototypes = static_cast<int>(train_std.rows());

  // +-1 targets: class 0 -> -1, class 1 -> +1.
  Eigen::VectorXd targets(train_std.rows());
  for (Eigen::Index i = 0; i < train_std.rows(); ++i)
    targets(i) = train_std.y(i) == 1 ? 1.0 : -1.0;

  const DualLSSVM dual = lssvm_dual_train(train_std.X, targets, gamma, sigma);
  const NystromMap nystrom = NystromMap::from_subsample(
      train_std.X, prototypes, sigma, cfg.get_seed("baseline.seed", 7));
  const PrimalModel primal =
      lssvm_primal_train(nystrom.apply_rows(train_std.X), targets, gamma);

  const Eigen::VectorXd dual_scores = dual.predict_rows(test_std.X);
  const Eigen::VectorXd primal_scores = primal.predict_rows(nystrom.apply_rows(test_std.X));

  BaselineResult result;
  int dual_hits = 0, primal_hits = 0, agree = 0;
  for (Eigen::Index i = 0; i < test_std.rows(); ++i) {
    const int dual_label = dual_scores(i) > 0.0 ? 1 : 0;
    const int primal_label = primal_scores(i) > 0.0 ? 1 : 0;
    if (dual_label == test_std.y(i)) ++dual_hits;
    if (primal_label == test_std.y(i)) ++primal_hits;
    if (dual_label == primal_label) ++agree;
  }
  const double n_test = static_cast<double>(test_std.rows());
  result.dual_test_accuracy = dual_hits / n_test;
  result.primal_test_accuracy = primal_hits / n_test;
  result.agreement = agree / n_test;

  json j;
  j["dual_test_accuracy"] = result.dual_test_accuracy;
  j["primal_test_accuracy"] = result.primal_test_accuracy;
  j["agreement"] = result.agreement;
  j["n_train"] = train_std.rows();
  j["n_test"] = test_std.rows();
  j["sigma"] = sigma;
  j["gamma"] = gamma;
  j["prototypes"] = prototypes;
  j["nystrom_rank"] = nystrom.rank();
  result.summary_json = j.dump(2);
  write_file(out_dir + "/summary.json", result.summary_json + "\n");
  return result;
}

SearchRunResult run_search(const KeyValueConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  ExperimentConfig ec = ExperimentConfig::from_config(cfg);
  const Dataset full = load_csv(ec.data_path, ec.label_column, ec.has_header);

  auto [train_raw, test_raw] = split(full, ec.split_fraction, ec.split_seed);
  auto [train_std, test_std, stats] = standardize(train_raw, test_raw);
  (void)test_std;
  (void)stats;

  NetworkSpec skeleton = ec.arch;
  skeleton.input_dim = static_cast<int>(full.dim());
  skeleton.num_classes = full.num_classes;

  SearchSpace space;
  space.dim_lo = cfg.get_int("search.dim_lo", 50);
  space.dim_hi = cfg.get_int("search.dim_hi", 600);
  space.features_lo = cfg.get_int("search.features_lo", (space.dim_lo + 1) / 2);
  space.features_hi = cfg.get_int("search.features_hi", space.dim_hi / 2);
  space.sigma_scale_lo = cfg.get_double("search.sigma_scale_lo", 0.25);
  space.sigma_scale_hi = cfg.get_double("search.sigma_scale_hi", 4.0);
  space.seed = cfg.get_seed("search.seed", 7);
  const int budget = cfg.get_int("search.budget", 10);

  SearchRunResult result;
  result.search = random_search(skeleton, space, budget, train_std, ec.train);

  std::string log = "trial,val_accuracy,val_loss,best_epoch,epochs,diverged";
  for (std::size_t b = 0; b < skeleton.blocks.size(); ++b) {
    const std::string p = ",block_" + std::to_string(b + 1);
    log += p + "_d_out" + p + "_features" + p + "_sigma";
  }
  log += '\n';
  for (std::size_t t = 0; t < result.search.trials.size(); ++t) {
    const SearchTrial& trial = result.search.trials[t];
    log += std::to_string(t) + ',' + fmt(trial.val_accuracy) + ',' + fmt(trial.val_loss) +
           ',' + std::to_string(trial.best_epoch) + ',' + std::to_string(trial.epochs) +
           ',' + (trial.diverged ? "true" : "false");
    for (const auto& bs : trial.spec.blocks)
      log += ',' + std::to_string(bs.d_out) + ',' + std::to_string(bs.num_features) + ',' +
             fmt(bs.sigma);
    log += '\n';
  }
  write_file(out_dir + "/search_log.csv", log);

  ExperimentConfig best_cfg = ec;
  best_cfg.arch = result.search.best_spec;
  write_file(out_dir + "/best_config.txt", best_cfg.echo().serialize());

  const SearchTrial& best =
      result.search.trials[static_cast<std::size_t>(result.search.best_index)];
  json j;
  j["best_trial"] = result.search.best_index;
  j["best_val_accuracy"] = best.val_accuracy;
  j["best_val_loss"] = best.val_loss;
  j["trials"] = result.search.trials.size();
  result.summary_json = j.dump(2);
  write_file(out_dir + "/summary.json", result.summary_json + "\n");
  return result;
}

}  // namespace nkm
