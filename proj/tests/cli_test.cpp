#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "kite/common/text.hpp"
#include "test_paths.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string err;
};

Result kite_run(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(KITE_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, kite::read_file(err)};
}

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kite_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kData = kite::test::fixture("synthetic").string();
const std::string kDesk = " --config " + kite::test::fixture("desk.cfg").string();

}  // namespace

TEST(Cli, UnknownKeyIsConfigErrorWithLine) {
  auto dir = fresh("badkey");
  kite::write_file_atomic(dir / "bad.cfg", "model.d_model = 32\nmodel.colour = 3\n");
  auto r = kite_run("split --data-dir " + kData + " --out-dir " + (dir / "o").string() + " --config " +
                        (dir / "bad.cfg").string(),
                    dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("kite: error[config]: ", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "o" / "manifest.json"));
}

TEST(Cli, MissingFlagAndBadValueAreConfigErrors) {
  auto dir = fresh("flags");
  EXPECT_EQ(kite_run("train --data-dir " + kData, dir).code, 2);
  EXPECT_EQ(kite_run("split --data-dir " + kData + " --out-dir " + dir.string() + " --set split.folds=x", dir).code, 2);
  EXPECT_EQ(kite_run("split --data-dir " + kData + " --out-dir " + dir.string() + " --threads 0", dir).code, 2);
}

TEST(Cli, DataAndCheckpointErrorsExitThree) {
  auto dir = fresh("data");
  auto r = kite_run("split --data-dir " + (dir / "nowhere").string() + " --out-dir " + dir.string(), dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(r.err.rfind("kite: error[data]: ", 0), 0u) << r.err;
  kite::write_file_atomic(dir / "corpus.txt", "CC[nH\n");
  EXPECT_EQ(kite_run("vocab --corpus " + (dir / "corpus.txt").string() + " --out-dir " + dir.string(), dir).code, 3);
}

TEST(Cli, SplitWritesEchoAndManifestAndEvalIsRepeatable) {
  auto dir = fresh("pipeline");
  const auto d = dir.string();
  const std::string common = kDesk + " --seed 2 --set train.epochs=2 --set pretrain.epochs=1";
  ASSERT_EQ(kite_run("vocab --corpus " + kData + "/corpus.txt --out-dir " + d + "/v" + common, dir).code, 0);
  ASSERT_EQ(kite_run("split --data-dir " + kData + " --out-dir " + d + "/s" + common, dir).code, 0);
  const auto echo = kite::read_file(dir / "s" / "config.txt");
  EXPECT_NE(echo.find("train.epochs = 2\n"), std::string::npos);
  EXPECT_NE(echo.find("seed = 2\n"), std::string::npos);
  const auto manifest = nlohmann::json::parse(kite::read_file(dir / "s" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "split");
  EXPECT_EQ(manifest["seed"], 2);
  EXPECT_EQ(manifest["outputs"].size(), 3u);

  const std::string data = " --data-dir " + kData + " --split " + d + "/s/split.json --vocab " + d + "/v/vocab.txt";
  ASSERT_EQ(kite_run("train" + data + " --out-dir " + d + "/t" + common, dir).code, 0);
  const std::string ck = " --checkpoint " + d + "/t/model.ckpt";
  ASSERT_EQ(kite_run("eval" + data + ck + " --out-dir " + d + "/e1" + common, dir).code, 0);
  ASSERT_EQ(kite_run("eval" + data + ck + " --out-dir " + d + "/e2" + common, dir).code, 0);
  EXPECT_EQ(kite::read_file(dir / "e1" / "metrics.json"), kite::read_file(dir / "e2" / "metrics.json"));
  EXPECT_EQ(kite::read_file(dir / "e1" / "roc.csv"), kite::read_file(dir / "e2" / "roc.csv"));

  ASSERT_EQ(kite_run("seqlen" + data + ck + " --subset all --out-dir " + d + "/q" + common, dir).code, 0);
  const auto seq = kite::read_file(dir / "q" / "seqlen.csv");
  EXPECT_EQ(seq.rfind("bin_start,bin_end,mean_accuracy,count\n", 0), 0u);
}
