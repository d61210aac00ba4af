// nkm: deep neural-kernel machine experiments from the command line.
//
// Subcommands:
//   train       dataset -> split -> standardize -> train -> model + metrics
//   predict     score a CSV with a saved model
//   baseline    dual LS-SVM vs primal LS-SVM over a Nystrom map (binary data)
//   dump-reprs  per-layer hidden representations of a saved model
//   search      random hyperparameter search over block dims / sigma
//
// NK_THREADS caps internal parallelism (Gram matrix row blocks).

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "nkm/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "nkm_out";
  std::optional<std::uint64_t> seed_override;
};

nkm::KeyValueConfig load_config(const CommonOpts& opts) {
  nkm::KeyValueConfig cfg = opts.config_path.empty()
                                ? nkm::KeyValueConfig{}
                                : nkm::KeyValueConfig::parse_file(opts.config_path);
  if (opts.seed_override) {
    const std::string s = std::to_string(*opts.seed_override);
    cfg.set("split.seed", s);
    cfg.set("train.seed", s);
    cfg.set("search.seed", s);
    cfg.set("baseline.seed", s);
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
  auto* c = cmd->add_option("--config", opts.config_path, "key=value config file");
  if (config_required) c->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed_override,
                  "override split/train/search seeds with one value");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep neural-kernel machines"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  int repeats = 0;
  auto* cmd_train = app.add_subcommand("train", "train a neural-kernel network");
  add_common(cmd_train, train_opts, true);
  cmd_train->add_option("--repeats", repeats,
                        "number of repeated runs (mean/std test accuracy reported)");

  CommonOpts predict_opts;
  std::string model_path, data_path, label_column;
  bool no_header = false;
  auto* cmd_predict = app.add_subcommand("predict", "score a CSV with a saved model");
  cmd_predict->add_option("--model", model_path, "model file")->required();
  cmd_predict->add_option("--data", data_path, "CSV to score")->required();
  cmd_predict->add_option("--label-column", label_column,
                          "label column to strip ('last', index, or name); "
                          "omit when the file has no label column");
  cmd_predict->add_flag("--no-header", no_header, "CSV has no header row");
  cmd_predict->add_option("--out", predict_opts.out_dir, "output directory");

  CommonOpts baseline_opts;
  auto* cmd_baseline =
      app.add_subcommand("baseline", "dual vs primal LS-SVM on a binary dataset");
  add_common(cmd_baseline, baseline_opts, true);

  CommonOpts dump_opts;
  std::string dump_model, dump_data, dump_label;
  bool dump_no_header = false;
  auto* cmd_dump = app.add_subcommand("dump-reprs", "write per-layer representations");
  cmd_dump->add_option("--model", dump_model, "model file")->required();
  cmd_dump->add_option("--data", dump_data, "CSV to push through the network")->required();
  cmd_dump->add_option("--label-column", dump_label, "label column to strip");
  cmd_dump->add_flag("--no-header", dump_no_header, "CSV has no header row");
  cmd_dump->add_option("--out", dump_opts.out_dir, "output directory");

  CommonOpts search_opts;
  auto* cmd_search = app.add_subcommand("search", "random hyperparameter search");
  add_common(cmd_search, search_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_train->parsed()) {
      nkm::KeyValueConfig cfg = load_config(train_opts);
      if (repeats > 0) cfg.set("repeats", std::to_string(repeats));
      auto ec = nkm::ExperimentConfig::from_config(cfg);
      auto result = nkm::run_train(ec, train_opts.out_dir);
      std::cout << result.summary_json << "\n";
    } else if (cmd_predict->parsed()) {
      std::optional<nkm::ColumnSelector> sel;
      if (!label_column.empty()) sel = nkm::ColumnSelector::parse(label_column);
      nkm::run_predict(model_path, data_path, sel, !no_header, predict_opts.out_dir);
      std::cout << "wrote " << predict_opts.out_dir << "/predictions.csv\n";
    } else if (cmd_baseline->parsed()) {
      auto result = nkm::run_baseline(load_config(baseline_opts), baseline_opts.out_dir);
      std::cout << result.summary_json << "\n";
    } else if (cmd_dump->parsed()) {
      std::optional<nkm::ColumnSelector> sel;
      if (!dump_label.empty()) sel = nkm::ColumnSelector::parse(dump_label);
      auto taps = nkm::run_dump_reprs(dump_model, dump_data, sel, !dump_no_header,
                                      dump_opts.out_dir);
      std::cout << "wrote " << taps.size() << " tap files to " << dump_opts.out_dir << "\n";
    } else if (cmd_search->parsed()) {
      auto result = nkm::run_search(load_config(search_opts), search_opts.out_dir);
      std::cout << result.summary_json << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
