#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <sstream>

#include "datasets.hpp"
#include "nkm/experiment.hpp"

using namespace nkm;
namespace ts = nkm::testsupport;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path write_blob_csv(const fs::path& dir, int per_class = 20, int classes = 2) {
  const Dataset blob = ts::make_blobs(per_class, classes, 2, 0.3, 1.5, 130);
  const fs::path path = dir / "blob.csv";
  ts::write_text(path, ts::to_csv(blob));
  return path;
}

KeyValueConfig quick_train_config(const fs::path& data) {
  KeyValueConfig cfg;
  cfg.set("data.path", data.string());
  cfg.set("arch.blocks", "2");
  cfg.set("arch.pooling", "maxout");
  cfg.set("blocks.1.m", "2");
  cfg.set("blocks.1.d_out", "8");
  cfg.set("blocks.1.features", "8");
  cfg.set("blocks.2.m", "2");
  cfg.set("blocks.2.d_out", "8");
  cfg.set("blocks.2.features", "8");
  cfg.set("train.epochs", "60");
  return cfg;
}

std::string strip_timing(const std::string& summary) {
  json j = json::parse(summary);
  j.erase("train_seconds");
  return j.dump(2);
}

}  // namespace

TEST_CASE("config text parses keys, comments, and types") {
  const KeyValueConfig cfg = KeyValueConfig::parse_text(
      "# experiment\n"
      "data.path = some.csv   # trailing comment\n"
      "split.fraction=0.75\n"
      "train.batch=16\n"
      "blocks.1.freeze=true\n");
  CHECK(cfg.get("data.path", "") == "some.csv");
  CHECK(cfg.get_double("split.fraction", 0.0) == 0.75);
  CHECK(cfg.get_int("train.batch", 0) == 16);
  CHECK(cfg.get_bool("blocks.1.freeze", false));
  CHECK(cfg.get_int("missing", 5) == 5);
  CHECK_THROWS(KeyValueConfig::parse_text("not a key value line\n"));
  CHECK_THROWS(cfg.get_int("data.path", 0));
}

TEST_CASE("experiment config fills defaults and echoes a valid config") {
  KeyValueConfig cfg;
  cfg.set("data.path", "x.csv");
  const ExperimentConfig ec = ExperimentConfig::from_config(cfg);
  CHECK(ec.split_fraction == 0.8);
  CHECK(ec.train.gamma == 1e-4);
  CHECK(ec.train.patience == 20);
  CHECK(ec.arch.blocks.size() == 2);
  CHECK(ec.arch.blocks[0].m == 4);
  CHECK(ec.arch.blocks[0].pooling == Pooling::Maxout);

  // The echo reparses to the same resolved experiment.
  const KeyValueConfig echoed = ec.echo();
  const ExperimentConfig round = ExperimentConfig::from_config(echoed);
  CHECK(round.split_fraction == ec.split_fraction);
  CHECK(round.arch.blocks.size() == ec.arch.blocks.size());
  CHECK(round.train.learning_rate == ec.train.learning_rate);
}

TEST_CASE("hybrid pooling resolves to a single identity transform") {
  KeyValueConfig cfg;
  cfg.set("data.path", "x.csv");
  cfg.set("arch.blocks", "1");
  cfg.set("arch.pooling", "hybrid");
  const ExperimentConfig ec = ExperimentConfig::from_config(cfg);
  CHECK(ec.arch.blocks[0].pooling == Pooling::Identity);
  CHECK(ec.arch.blocks[0].m == 1);
}

TEST_CASE("train pipeline writes model, curves, summary, and resolved config") {
  const auto dir = ts::make_temp_dir("exp_train");
  const auto data = write_blob_csv(dir);
  const ExperimentConfig ec = ExperimentConfig::from_config(quick_train_config(data));
  const TrainRunResult result = run_train(ec, (dir / "out").string());

  CHECK(fs::exists(dir / "out/model.nkm"));
  CHECK(fs::exists(dir / "out/epochs.csv"));
  CHECK(fs::exists(dir / "out/summary.json"));
  CHECK(fs::exists(dir / "out/config_resolved.txt"));

  const json summary = json::parse(result.summary_json);
  CHECK(summary["test_accuracy"].get<double>() >= 0.0);
  CHECK(summary["test_accuracy"].get<double>() <= 1.0);
  CHECK(summary["best_epoch"].get<int>() >= 1);
  CHECK(summary["params_count"].get<std::size_t>() == result.model.net.parameter_count());
  CHECK(summary.contains("train_seconds"));

  // Resolved config reproduces the run exactly (same seeds, same data).
  const KeyValueConfig echoed =
      KeyValueConfig::parse_file((dir / "out/config_resolved.txt").string());
  const TrainRunResult again =
      run_train(ExperimentConfig::from_config(echoed), (dir / "out2").string());
  CHECK(strip_timing(again.summary_json) == strip_timing(result.summary_json));
  CHECK(ts::read_text(dir / "out/model.nkm") == ts::read_text(dir / "out2/model.nkm"));
  fs::remove_all(dir);
}

TEST_CASE("repeats aggregate mean and std over reseeded runs") {
  const auto dir = ts::make_temp_dir("exp_repeats");
  const auto data = write_blob_csv(dir, 12);
  KeyValueConfig cfg = quick_train_config(data);
  cfg.set("repeats", "3");
  cfg.set("train.epochs", "25");
  const TrainRunResult result =
      run_train(ExperimentConfig::from_config(cfg), (dir / "out").string());
  CHECK(result.repeat_accuracies.size() == 3);
  const json summary = json::parse(result.summary_json);
  CHECK(summary["repeats"].get<int>() == 3);
  CHECK(summary["per_repeat"].size() == 3);
  CHECK(summary["test_accuracy_std"].get<double>() >= 0.0);
  CHECK(fs::exists(dir / "out/repeat_1/model.nkm"));
  CHECK(fs::exists(dir / "out/repeat_3/epochs.csv"));
  fs::remove_all(dir);
}

TEST_CASE("predict emits probabilities summing to one and matches in-memory scores") {
  const auto dir = ts::make_temp_dir("exp_predict");
  const auto data = write_blob_csv(dir);
  const ExperimentConfig ec = ExperimentConfig::from_config(quick_train_config(data));
  const TrainRunResult trained = run_train(ec, (dir / "out").string());

  run_predict((dir / "out/model.nkm").string(), data.string(), ColumnSelector::last(), true,
              (dir / "pred").string());

  // Probability rows sum to 1 within 1e-9.
  std::istringstream in(ts::read_text(dir / "pred/predictions.csv"));
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // row index
    std::getline(ss, cell, ',');  // label
    double sum = 0.0;
    while (std::getline(ss, cell, ',')) sum += std::stod(cell);
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  CHECK(rows == 40);

  // scores.csv equals an in-memory forward pass, formatted the same way.
  const Dataset raw = load_csv(data.string(), ColumnSelector::last(), true);
  const Eigen::MatrixXd standardized = trained.model.stats.apply(raw.X);
  const ForwardCache cache = network_forward(trained.model.net, to_columns(standardized));
  std::string expected;
  char buf[32];
  for (Eigen::Index i = 0; i < cache.scores.cols(); ++i) {
    for (Eigen::Index q = 0; q < cache.scores.rows(); ++q) {
      if (q) expected += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", cache.scores(q, i));
      expected += buf;
    }
    expected += '\n';
  }
  CHECK(ts::read_text(dir / "pred/scores.csv") == expected);
  fs::remove_all(dir);
}

TEST_CASE("predict on the training file of a converged model matches ground truth") {
  const auto dir = ts::make_temp_dir("exp_predict_truth");
  const auto data = write_blob_csv(dir);
  KeyValueConfig cfg = quick_train_config(data);
  cfg.set("train.epochs", "120");
  const TrainRunResult trained =
      run_train(ExperimentConfig::from_config(cfg), (dir / "out").string());
  REQUIRE(trained.report.test->accuracy == 1.0);

  run_predict((dir / "out/model.nkm").string(), data.string(), ColumnSelector::last(), true,
              (dir / "pred").string());
  const Dataset raw = load_csv(data.string(), ColumnSelector::last(), true);
  std::istringstream in(ts::read_text(dir / "pred/predictions.csv"));
  std::string line;
  std::getline(in, line);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    REQUIRE(std::getline(in, line));
    std::stringstream ss(line);
    std::string cell, label;
    std::getline(ss, cell, ',');
    std::getline(ss, label, ',');
    CHECK(label == raw.label_names[static_cast<std::size_t>(raw.y(i))]);
  }
  fs::remove_all(dir);
}

TEST_CASE("predict reports a dimension mismatch naming both dims") {
  const auto dir = ts::make_temp_dir("exp_dim");
  const auto data = write_blob_csv(dir);
  run_train(ExperimentConfig::from_config(quick_train_config(data)), (dir / "out").string());

  ts::write_text(dir / "wrong.csv", "a,b,c,label\n1,2,3,x\n4,5,6,y\n");
  try {
    run_predict((dir / "out/model.nkm").string(), (dir / "wrong.csv").string(),
                ColumnSelector::last(), true, (dir / "pred").string());
    FAIL("expected dimension mismatch");
  } catch (const std::exception& e) {
    const std::string message = e.what();
    CHECK(message.find("2") != std::string::npos);
    CHECK(message.find("3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("dump-reprs writes one file per tap point") {
  const auto dir = ts::make_temp_dir("exp_dump");
  const auto data = write_blob_csv(dir);
  KeyValueConfig cfg = quick_train_config(data);
  cfg.set("blocks.1.m", "4");
  cfg.set("blocks.2.m", "4");
  cfg.set("train.epochs", "5");
  run_train(ExperimentConfig::from_config(cfg), (dir / "out").string());

  const auto taps = run_dump_reprs((dir / "out/model.nkm").string(), data.string(),
                                   ColumnSelector::last(), true, (dir / "reprs").string());
  CHECK(taps.size() == 13);  // 2 * (4 + 1 + 1) + 1
  for (const auto& tap : taps) CHECK(fs::exists(dir / "reprs" / (tap + ".csv")));

  // The scores tap is byte-identical with predict's scores file.
  run_predict((dir / "out/model.nkm").string(), data.string(), ColumnSelector::last(), true,
              (dir / "pred").string());
  CHECK(ts::read_text(dir / "reprs/scores.csv") == ts::read_text(dir / "pred/scores.csv"));
  fs::remove_all(dir);
}

TEST_CASE("conv taps with filters 1/m match the average network") {
  const auto dir = ts::make_temp_dir("exp_conv_avg");
  const auto data = write_blob_csv(dir);

  KeyValueConfig conv_cfg = quick_train_config(data);
  conv_cfg.set("arch.pooling", "conv");
  conv_cfg.set("train.epochs", "0");
  KeyValueConfig avg_cfg = quick_train_config(data);
  avg_cfg.set("arch.pooling", "average");
  avg_cfg.set("train.epochs", "0");

  run_train(ExperimentConfig::from_config(conv_cfg), (dir / "conv").string());
  run_train(ExperimentConfig::from_config(avg_cfg), (dir / "avg").string());
  run_dump_reprs((dir / "conv/model.nkm").string(), data.string(), ColumnSelector::last(),
                 true, (dir / "conv_reprs").string());
  run_dump_reprs((dir / "avg/model.nkm").string(), data.string(), ColumnSelector::last(),
                 true, (dir / "avg_reprs").string());

  std::istringstream a(ts::read_text(dir / "conv_reprs/block_1.pooled.csv"));
  std::istringstream b(ts::read_text(dir / "avg_reprs/block_1.pooled.csv"));
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) {
    std::stringstream sa(la), sb(lb);
    std::string ca, cb;
    while (std::getline(sa, ca, ',') && std::getline(sb, cb, ','))
      CHECK(std::abs(std::stod(ca) - std::stod(cb)) <= 1e-12);
  }
  fs::remove_all(dir);
}

TEST_CASE("baseline agrees between dual and full-rank primal on a blob") {
  const auto dir = ts::make_temp_dir("exp_baseline");
  const auto data = write_blob_csv(dir, 30);
  KeyValueConfig cfg;
  cfg.set("data.path", data.string());
  cfg.set("baseline.gamma", "10");
  const BaselineResult result = run_baseline(cfg, (dir / "out").string());
  CHECK(result.agreement >= 0.99);
  CHECK(result.dual_test_accuracy >= 0.9);
  CHECK(result.primal_test_accuracy >= 0.9);
  CHECK(fs::exists(dir / "out/summary.json"));
  fs::remove_all(dir);
}

TEST_CASE("baseline completes on a 208-point binary problem") {
  const auto dir = ts::make_temp_dir("exp_baseline_208");
  const Dataset blob = ts::make_blobs(104, 2, 5, 1.0, 1.3, 131);
  ts::write_text(dir / "data.csv", ts::to_csv(blob));
  KeyValueConfig cfg;
  cfg.set("data.path", (dir / "data.csv").string());
  const BaselineResult result = run_baseline(cfg, (dir / "out").string());
  CHECK(result.dual_test_accuracy >= 0.0);
  CHECK(result.dual_test_accuracy <= 1.0);
  fs::remove_all(dir);
}

TEST_CASE("baseline refuses non-binary datasets") {
  const auto dir = ts::make_temp_dir("exp_baseline_refusal");
  const auto data = write_blob_csv(dir, 10, 3);
  KeyValueConfig cfg;
  cfg.set("data.path", data.string());
  try {
    run_baseline(cfg, (dir / "out").string());
    FAIL("expected refusal");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("binary") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("baseline guards the dense solve size") {
  const auto dir = ts::make_temp_dir("exp_baseline_guard");
  std::string big = "x,label\n";
  for (int i = 0; i < 20001; ++i)
    big += std::to_string(i % 97) + "," + (i % 2 ? "a\n" : "b\n");
  ts::write_text(dir / "big.csv", big);
  KeyValueConfig cfg;
  cfg.set("data.path", (dir / "big.csv").string());
  try {
    run_baseline(cfg, (dir / "out").string());
    FAIL("expected size guard");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("20000") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("search pipeline logs trials and emits a loadable best config") {
  const auto dir = ts::make_temp_dir("exp_search");
  const auto data = write_blob_csv(dir);
  KeyValueConfig cfg = quick_train_config(data);
  cfg.set("search.budget", "2");
  cfg.set("search.dim_lo", "4");
  cfg.set("search.dim_hi", "12");
  cfg.set("search.features_lo", "4");
  cfg.set("search.features_hi", "12");
  cfg.set("train.epochs", "20");

  const SearchRunResult result = run_search(cfg, (dir / "out").string());
  CHECK(result.search.trials.size() == 2);
  CHECK(fs::exists(dir / "out/search_log.csv"));
  CHECK(fs::exists(dir / "out/summary.json"));

  const KeyValueConfig best =
      KeyValueConfig::parse_file((dir / "out/best_config.txt").string());
  const ExperimentConfig ec = ExperimentConfig::from_config(best);
  CHECK(ec.arch.blocks[0].d_out >= 4);
  CHECK(ec.arch.blocks[0].d_out <= 12);
  fs::remove_all(dir);
}

TEST_CASE("missing dataset path fails loudly") {
  KeyValueConfig cfg;
  cfg.set("data.path", "/nonexistent/nowhere.csv");
  const auto dir = ts::make_temp_dir("exp_missing");
  try {
    run_train(ExperimentConfig::from_config(cfg), (dir / "out").string());
    FAIL("expected failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("/nonexistent/nowhere.csv") != std::string::npos);
  }
  fs::remove_all(dir);
}
