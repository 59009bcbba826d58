#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "certmark/record.hpp"
#include "testing.hpp"

namespace certmark {
namespace {

namespace fs = std::filesystem;

const char* kSmallConfig = R"(seed = 3

[dataset]
name = "MUTAG"
root = "@ROOT@"

[federated]
clients = 4
watermarked_clients = 2
rounds = 3
local_epochs = 1

[attack]
epochs = 1
shadow_epochs = 1
)";

std::string small_config() {
  std::string text = kSmallConfig;
  const auto at = text.find("@ROOT@");
  text.replace(at, 6, testing::data_dir().string());
  return text;
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + testing::cli_path().string() + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool same_file(const fs::path& a, const fs::path& b) { return read_file(a) == read_file(b); }

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { testing::write_text(tmp / "run.toml", small_config()); }
  std::string base(const fs::path& out) const {
    return "--config " + quoted(tmp / "run.toml") + " --out " + quoted(out);
  }
  testing::TempDir tmp;
};

TEST_F(Cli, TrainTwiceIsByteIdentical) {
  ASSERT_EQ(run_cli(base(tmp / "a") + " train"), 0);
  ASSERT_EQ(run_cli(base(tmp / "b") + " --threads 2 train"), 0);
  EXPECT_TRUE(same_file(tmp / "a" / "checkpoint.cmrk", tmp / "b" / "checkpoint.cmrk"));
  EXPECT_TRUE(same_file(tmp / "a" / "train.json", tmp / "b" / "train.json"));
  EXPECT_TRUE(same_file(tmp / "a" / "train.txt", tmp / "b" / "train.txt"));

  // Stop after one round, then resume to the end.
  ASSERT_EQ(run_cli(base(tmp / "c") + " train --until 1"), 0);
  const auto partial = nlohmann::json::parse(read_file(tmp / "c" / "train.json"));
  EXPECT_EQ(partial.at("round"), 1);
  EXPECT_FALSE(partial.at("complete").get<bool>());
  ASSERT_EQ(run_cli(base(tmp / "c") + " train --resume " + quoted(tmp / "c" / "checkpoint.cmrk")), 0);
  EXPECT_TRUE(same_file(tmp / "a" / "checkpoint.cmrk", tmp / "c" / "checkpoint.cmrk"));
  EXPECT_TRUE(same_file(tmp / "a" / "train.json", tmp / "c" / "train.json"));
}

TEST_F(Cli, FullPipelineWritesReports) {
  const auto out = tmp / "run";
  ASSERT_EQ(run_cli(base(out) + " ingest"), 0);
  ASSERT_EQ(run_cli(base(out) + " train"), 0);
  ASSERT_EQ(run_cli(base(out) + " attack"), 0);
  ASSERT_EQ(run_cli(base(out) + " certify"), 0);
  ASSERT_EQ(run_cli(base(out) + " verify"), 0);
  ASSERT_EQ(run_cli("--out " + quoted(out) + " report"), 0);
  for (const char* name : {"ingest", "train", "attack", "certify", "verify", "report"}) {
    for (const char* ext : {".json", ".txt", ".manifest.json"})
      EXPECT_TRUE(fs::exists(out / (std::string(name) + ext))) << name << ext;
    const auto man = nlohmann::json::parse(read_file(out / (std::string(name) + ".manifest.json")));
    EXPECT_EQ(man.at("command"), name);
    EXPECT_EQ(man.at("seed"), 3);
    EXPECT_EQ(man.at("config_hash").get<std::string>().size(), 64u);
  }
  const auto ingest = nlohmann::json::parse(read_file(out / "ingest.json"));
  EXPECT_EQ(ingest.at("graphs"), 188);
  EXPECT_EQ(ingest.at("train_class_counts"), (std::vector<int>{42, 83}));
  const auto attack = nlohmann::json::parse(read_file(out / "attack.json"));
  EXPECT_EQ(attack.at("attacks").size(), 3u);
  for (const auto& a : attack.at("attacks")) EXPECT_TRUE(fs::exists(out / a.at("model").get<std::string>()));
  const auto verify = nlohmann::json::parse(read_file(out / "verify.json"));
  EXPECT_EQ(verify.at("threshold"), 0.75);
  EXPECT_EQ(verify.at("verdicts").size(), 2u);
  const auto report = read_file(out / "report.txt");
  for (const char* text : {"Attack", "Distillation", "Finetuning", "1-Layer Pert.", "CWA@r", "claimant"})
    EXPECT_NE(report.find(text), std::string::npos) << text;
}

TEST_F(Cli, ExitCodesByErrorKind) {
  testing::write_text(tmp / "bad.toml", "[federated]\nclientz = 3\n");
  EXPECT_EQ(run_cli("--config " + quoted(tmp / "bad.toml") + " --out " + quoted(tmp / "x") + " ingest"), 2);
  testing::write_text(tmp / "nodata.toml", "[dataset]\nroot = " + std::string("\"") + (tmp / "void").string() + "\"\n");
  EXPECT_EQ(run_cli("--config " + quoted(tmp / "nodata.toml") + " --out " + quoted(tmp / "x") + " ingest"), 3);
  EXPECT_EQ(run_cli(base(tmp / "empty") + " certify"), 4);
  testing::write_text(tmp / "empty" / "checkpoint.cmrk", "CMRK garbage");
  EXPECT_EQ(run_cli(base(tmp / "empty") + " verify"), 4);
  EXPECT_EQ(run_cli("--out " + quoted(tmp / "nothing") + " report"), 4);
  EXPECT_NE(run_cli("frobnicate"), 0);
  EXPECT_NE(run_cli(base(tmp / "x") + " --scale huge ingest"), 0);
}

}  // namespace
}  // namespace certmark
