#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cagan/cli.hpp"
#include "support/temp_dir.hpp"

namespace cagan {
namespace {

using testing::TempDir;
namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

int count_lines(const fs::path& path) {
  std::ifstream in(path);
  int n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

int count_files(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<int>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

TEST(Cli, SynthDataWritesPairsAndMasks) {
  TempDir tmp;
  const auto d = tmp / "d";
  const auto r = invoke({"synth-data", "--out", d.string(), "--count", "8", "--resolution", "64x48", "--seed", "1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::is_regular_file(d / "manifest.tsv"));
  EXPECT_EQ(count_files(d / "humans"), 8);
  EXPECT_EQ(count_files(d / "articles"), 8);
  EXPECT_EQ(count_files(d / "masks"), 8);
}

TEST(Cli, TrainWritesCheckpointAndMetrics) {
  TempDir tmp;
  const auto d = tmp / "d";
  ASSERT_EQ(invoke({"synth-data", "--out", d.string(), "--count", "8", "--seed", "1"}).code, 0);
  const auto run1 = tmp / "run1";
  const auto r = invoke({"train", "--data", d.string(), "--out", run1.string(), "--steps", "5", "--batch", "2",
                         "--resolution", "64x48", "--seed", "1"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(count_lines(run1 / "metrics.jsonl"), 5);
  EXPECT_TRUE(fs::is_regular_file(run1 / "final.ckpt"));

  const auto e = invoke({"eval", "--data", d.string(), "--checkpoint", (run1 / "final.ckpt").string(), "--samples",
                         "4"});
  ASSERT_EQ(e.code, cli::kExitOk) << e.err;
  const auto report = nlohmann::json::parse(e.out);
  EXPECT_EQ(report.at("n_samples").get<int>(), 4);

  const auto swapped = tmp / "swap.png";
  const auto s = invoke({"swap", "--checkpoint", (run1 / "final.ckpt").string(), "--human",
                         (d / "humans" / "pair_00000.png").string(), "--old",
                         (d / "articles" / "pair_00000.png").string(), "--new",
                         (d / "articles" / "pair_00001.png").string(), "--out", swapped.string()});
  ASSERT_EQ(s.code, cli::kExitOk) << s.err;
  EXPECT_TRUE(fs::is_regular_file(swapped));

  const auto g = invoke({"grid", "--checkpoint", (run1 / "final.ckpt").string(), "--data", d.string(), "--out",
                         (tmp / "grid.png").string(), "--mode", "fixed-human", "--count", "4"});
  ASSERT_EQ(g.code, cli::kExitOk) << g.err;
  EXPECT_TRUE(fs::is_regular_file(tmp / "grid.png"));
}

TEST(Cli, TrainWithoutDataWritesNothing) {
  TempDir tmp;
  const auto r = invoke({"train", "--out", (tmp / "run").string(), "--steps", "5"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
  EXPECT_EQ(count_files(tmp.path()), 0);
}

TEST(Cli, InvalidValuesFailBeforeSideEffects) {
  TempDir tmp;
  const auto d = tmp / "d";
  EXPECT_EQ(invoke({"synth-data", "--out", d.string(), "--count", "1"}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"synth-data", "--out", d.string(), "--resolution", "64by48"}).code, cli::kExitValidation);
  EXPECT_FALSE(fs::exists(d));
  EXPECT_EQ(invoke({"train", "--data", d.string(), "--out", (tmp / "run").string()}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"eval", "--data", d.string()}).code, cli::kExitValidation);
  EXPECT_EQ(count_files(tmp.path()), 0);
}

TEST(Cli, UsageErrors) {
  const auto unknown = invoke({"dance"});
  EXPECT_EQ(unknown.code, cli::kExitValidation);
  EXPECT_NE(unknown.err.find("synth-data"), std::string::npos);
  EXPECT_EQ(invoke({}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"synth-data", "--out", "x", "--colour", "red"}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
}

TEST(Cli, HelpShowsRecipeDefaults) {
  const auto r = invoke({"train", "--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  for (const char* s : {"0.0002", "16", "0.1", "10000"}) EXPECT_NE(r.out.find(s), std::string::npos) << s;
}

}  // namespace
}  // namespace cagan
