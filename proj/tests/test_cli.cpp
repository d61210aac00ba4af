#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "datasets.hpp"
#include "nkm/dataset.hpp"

namespace ts = nkm::testsupport;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli_output.log";
  const std::string cmd =
      std::string(NKM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = ts::read_text(log);
  return result;
}

fs::path write_blob_setup(const fs::path& dir, int per_class = 20, int classes = 2) {
  const nkm::Dataset blob = ts::make_blobs(per_class, classes, 2, 0.3, 1.5, 140);
  const fs::path data = dir / "blob.csv";
  ts::write_text(data, ts::to_csv(blob));
  ts::write_text(dir / "train.cfg",
                 "data.path=" + data.string() +
                     "\n"
                     "arch.blocks=2\narch.pooling=maxout\n"
                     "blocks.1.m=2\nblocks.1.d_out=8\nblocks.1.features=8\n"
                     "blocks.2.m=2\nblocks.2.d_out=8\nblocks.2.features=8\n"
                     "train.epochs=60\n");
  return data;
}

std::string summary_without_timing(const fs::path& path) {
  json j = json::parse(ts::read_text(path));
  j.erase("train_seconds");
  return j.dump(2);
}

}  // namespace

TEST_CASE("train subcommand writes artifacts and a summary") {
  const auto dir = ts::make_temp_dir("cli_train");
  write_blob_setup(dir);
  const RunResult r = run_cli(
      "train --config " + (dir / "train.cfg").string() + " --out " + (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out/model.nkm"));
  CHECK(fs::exists(dir / "out/summary.json"));
  CHECK(fs::exists(dir / "out/epochs.csv"));
  const json summary = json::parse(ts::read_text(dir / "out/summary.json"));
  CHECK(summary["test_accuracy"].get<double>() >= 0.0);
  CHECK(summary["test_accuracy"].get<double>() <= 1.0);
  fs::remove_all(dir);
}

TEST_CASE("missing dataset fails with the path in the message") {
  const auto dir = ts::make_temp_dir("cli_missing");
  ts::write_text(dir / "bad.cfg", "data.path=/no/such/file.csv\n");
  const RunResult r = run_cli(
      "train --config " + (dir / "bad.cfg").string() + " --out " + (dir / "out").string(),
      dir);
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("/no/such/file.csv") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("train twice with identical seeds is byte-identical") {
  const auto dir = ts::make_temp_dir("cli_determinism");
  write_blob_setup(dir);
  const std::string cfg = (dir / "train.cfg").string();
  CHECK(run_cli("train --config " + cfg + " --out " + (dir / "a").string(), dir).exit_code == 0);
  CHECK(run_cli("train --config " + cfg + " --out " + (dir / "b").string(), dir).exit_code == 0);
  CHECK(ts::read_text(dir / "a/model.nkm") == ts::read_text(dir / "b/model.nkm"));
  CHECK(summary_without_timing(dir / "a/summary.json") ==
        summary_without_timing(dir / "b/summary.json"));
  CHECK(ts::read_text(dir / "a/epochs.csv") == ts::read_text(dir / "b/epochs.csv"));
  fs::remove_all(dir);
}

TEST_CASE("seed override changes the run") {
  const auto dir = ts::make_temp_dir("cli_seed");
  write_blob_setup(dir);
  const std::string cfg = (dir / "train.cfg").string();
  CHECK(run_cli("train --config " + cfg + " --out " + (dir / "a").string(), dir).exit_code == 0);
  CHECK(run_cli("train --config " + cfg + " --seed 99 --out " + (dir / "b").string(), dir)
            .exit_code == 0);
  CHECK(ts::read_text(dir / "a/model.nkm") != ts::read_text(dir / "b/model.nkm"));
  fs::remove_all(dir);
}

TEST_CASE("predict writes one row per input with probabilities") {
  const auto dir = ts::make_temp_dir("cli_predict");
  const auto data = write_blob_setup(dir);
  REQUIRE(run_cli("train --config " + (dir / "train.cfg").string() + " --out " +
                      (dir / "out").string(),
                  dir).exit_code == 0);
  const RunResult r = run_cli("predict --model " + (dir / "out/model.nkm").string() +
                                  " --data " + data.string() +
                                  " --label-column last --out " + (dir / "pred").string(),
                              dir);
  CHECK(r.exit_code == 0);
  std::istringstream in(ts::read_text(dir / "pred/predictions.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "row,label,prob_0,prob_1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 40);
  fs::remove_all(dir);
}

TEST_CASE("baseline refuses multiclass input") {
  const auto dir = ts::make_temp_dir("cli_baseline3");
  const nkm::Dataset blob = ts::make_blobs(10, 3, 2, 0.4, 2.0, 141);
  ts::write_text(dir / "tri.csv", ts::to_csv(blob));
  ts::write_text(dir / "b.cfg", "data.path=" + (dir / "tri.csv").string() + "\n");
  const RunResult r = run_cli(
      "baseline --config " + (dir / "b.cfg").string() + " --out " + (dir / "out").string(),
      dir);
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("binary") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("baseline runs on binary data") {
  const auto dir = ts::make_temp_dir("cli_baseline");
  const auto data = write_blob_setup(dir, 25);
  ts::write_text(dir / "b.cfg",
                 "data.path=" + data.string() + "\nbaseline.gamma=10\n");
  const RunResult r = run_cli(
      "baseline --config " + (dir / "b.cfg").string() + " --out " + (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  const json summary = json::parse(ts::read_text(dir / "out/summary.json"));
  CHECK(summary["agreement"].get<double>() >= 0.99);
  fs::remove_all(dir);
}

TEST_CASE("dump-reprs writes the expected tap files") {
  const auto dir = ts::make_temp_dir("cli_dump");
  const auto data = write_blob_setup(dir);
  REQUIRE(run_cli("train --config " + (dir / "train.cfg").string() + " --out " +
                      (dir / "out").string(),
                  dir).exit_code == 0);
  const RunResult r = run_cli("dump-reprs --model " + (dir / "out/model.nkm").string() +
                                  " --data " + data.string() +
                                  " --label-column last --out " + (dir / "reprs").string(),
                              dir);
  CHECK(r.exit_code == 0);
  // 2 blocks, m=2: 2*(2+1+1)+1 = 9 tap files.
  CHECK(fs::exists(dir / "reprs/block_1.lin_1.csv"));
  CHECK(fs::exists(dir / "reprs/block_1.lin_2.csv"));
  CHECK(fs::exists(dir / "reprs/block_1.pooled.csv"));
  CHECK(fs::exists(dir / "reprs/block_1.phi.csv"));
  CHECK(fs::exists(dir / "reprs/block_2.pooled.csv"));
  CHECK(fs::exists(dir / "reprs/scores.csv"));
  fs::remove_all(dir);
}

TEST_CASE("repeats flag reports mean and std") {
  const auto dir = ts::make_temp_dir("cli_repeats");
  write_blob_setup(dir, 12);
  const RunResult r =
      run_cli("train --config " + (dir / "train.cfg").string() + " --repeats 3 --out " +
                  (dir / "out").string(),
              dir);
  CHECK(r.exit_code == 0);
  const json summary = json::parse(ts::read_text(dir / "out/summary.json"));
  CHECK(summary["repeats"].get<int>() == 3);
  CHECK(summary.contains("test_accuracy_mean"));
  CHECK(summary.contains("test_accuracy_std"));
  fs::remove_all(dir);
}

TEST_CASE("search subcommand emits a log and best config") {
  const auto dir = ts::make_temp_dir("cli_search");
  write_blob_setup(dir);
  ts::write_text(dir / "s.cfg", ts::read_text(dir / "train.cfg") +
                                    "search.budget=2\nsearch.dim_lo=4\nsearch.dim_hi=12\n"
                                    "search.features_lo=4\nsearch.features_hi=12\n"
                                    "train.epochs=20\n");
  const RunResult r = run_cli(
      "search --config " + (dir / "s.cfg").string() + " --out " + (dir / "out").string(),
      dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "out/search_log.csv"));
  CHECK(fs::exists(dir / "out/best_config.txt"));
  const json summary = json::parse(ts::read_text(dir / "out/summary.json"));
  CHECK(summary["best_val_accuracy"].get<double>() >= 0.0);
  fs::remove_all(dir);
}

TEST_CASE("unknown subcommands and missing flags fail") {
  const auto dir = ts::make_temp_dir("cli_usage");
  CHECK(run_cli("frobnicate", dir).exit_code != 0);
  CHECK(run_cli("train", dir).exit_code != 0);  // --config is required
  fs::remove_all(dir);
}
