// tests/cli_test.cc

// Copyright 2026  The nar-asr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Runs the nar_asr binary end to end on a tiny corpus and model.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "narasr/checkpoint.h"
#include "narasr/optim.h"
#include "narasr/pipeline.h"

namespace narasr {
namespace {

namespace fs = std::filesystem;

const fs::path& Root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "narasr_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome Cli(const std::string& args) {
  const fs::path out = Root() / "stdout.txt", err = Root() / "stderr.txt";
  const std::string cmd = std::string(NAR_ASR_BIN) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), Slurp(out), Slurp(err)};
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Corpus and configuration shared by the tests, built once.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    WriteFile(Root() / "spec.conf",
              "train_count = 8\ndev_count = 3\ntest_count = 2\nlm_sentences = 24\n"
              "max_tokens = 5\n");
    WriteFile(Root() / "tiny.conf",
              "encoder.d_m = 8\nencoder.d_n = 8\nencoder.cnn_filters = 2\n"
              "encoder.pre_layers = 1\nencoder.refine_layers = 0\nencoder.post_layers = 1\n"
              "encoder.heads = 2\nencoder.d_ff = 16\nencoder.query_count = 8\n"
              "decoder.layers = 1\ndecoder.heads = 2\ndecoder.d_ff = 16\n"
              "decoder.max_positions = 8\nar.layers = 1\nar.heads = 2\nar.d_ff = 16\n"
              "train.warmup_steps = 3\ntrain.batch_seconds = 3\n"
              "lm.epochs = 2\npretrain.epochs = 2\nfinetune.epochs = 3\nar.epochs = 1\n"
              "mlm.batch_sentences = 6\n");
    ASSERT_EQ(Cli("gen-data --spec " + (Root() / "spec.conf").string() +
                  " --seed 7 --out " + Data()).code, 0);
  }
  static std::string Data() { return (Root() / "data").string(); }
  static std::string Common(const std::string& out) {
    return "--config " + (Root() / "tiny.conf").string() + " --data " + Data() + " --out " +
           (Root() / out).string();
  }
};

TEST_F(CliTest, GenDataIsDeterministicAndSized) {
  const fs::path again = Root() / "data2";
  ASSERT_EQ(Cli("gen-data --spec " + (Root() / "spec.conf").string() + " --seed 7 --out " +
                again.string()).code, 0);
  for (const char* split : {"train", "dev", "test"}) {
    EXPECT_EQ(Slurp(fs::path(Data()) / split / "manifest.jsonl"),
              Slurp(again / split / "manifest.jsonl"));
  }
  EXPECT_EQ(ReadManifest((fs::path(Data()) / "train" / "manifest.jsonl").string()).records.size(), 8u);
  EXPECT_EQ(ReadManifest((fs::path(Data()) / "dev" / "manifest.jsonl").string()).records.size(), 3u);
  EXPECT_EQ(ReadManifest((fs::path(Data()) / "test" / "manifest.jsonl").string()).records.size(), 2u);
}

TEST_F(CliTest, GenDataRejectsToneAboveNyquist) {
  WriteFile(Root() / "bad.conf", "tone_base_hz = 7000\n");
  Outcome o = Cli("gen-data --spec " + (Root() / "bad.conf").string() + " --out " +
                  (Root() / "bad").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("tone_base_hz"), std::string::npos) << o.err;
}

TEST_F(CliTest, StatsPrintsAllRowsAndRejectsEmpty) {
  Outcome o = Cli("stats --manifest " + (fs::path(Data()) / "train" / "manifest.jsonl").string());
  ASSERT_EQ(o.code, 0);
  for (const char* label : {"#Utterances", "#Hours", "#Speakers", "Duration (Sec.) Min.",
                            "Duration (Sec.) Max.", "Duration (Sec.) Avg.",
                            "#Tokens/Sentence Min.", "#Tokens/Sentence Max.",
                            "#Tokens/Sentence Avg."}) {
    EXPECT_NE(o.out.find(label), std::string::npos) << label;
  }
  WriteFile(Root() / "empty.jsonl", "");
  Outcome e = Cli("stats --manifest " + (Root() / "empty.jsonl").string());
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find("empty manifest"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(Cli("no-such-command").code, 2);
  EXPECT_EQ(Cli("finetune --mode sideways " + Common("usage")).code, 2);
  Outcome o = Cli("train-lm " + Common("usage") + " --set bogus.key=1");
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bogus.key"), std::string::npos);
}

TEST_F(CliTest, FinetuneModesAndPrerequisites) {
  Outcome missing = Cli("finetune --mode full " + Common("modes"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("encoder-pretrain"), std::string::npos) << missing.err;
  EXPECT_EQ(Cli("finetune --mode scratch " + Common("modes")).code, 0);
  EXPECT_FALSE(EpochCheckpoints((Root() / "modes" / "finetune-scratch").string()).empty());
  EXPECT_TRUE(fs::exists(Root() / "modes" / "finetune-scratch" / "run_config.txt"));

  ASSERT_EQ(Cli("train-lm " + Common("modes")).code, 0);
  Outcome no_enc = Cli("finetune --mode full " + Common("modes"));
  EXPECT_EQ(no_enc.code, 2);
  EXPECT_EQ(Cli("finetune --mode no-encoder-pretrain " + Common("modes")).code, 0);
  ASSERT_EQ(Cli("pretrain-encoder " + Common("modes")).code, 0);
  EXPECT_EQ(Cli("finetune --mode full " + Common("modes")).code, 0);
  EXPECT_EQ(Cli("finetune --mode no-decoder-pretrain " + Common("modes")).code, 0);
}

TEST_F(CliTest, LogLrAtWarmupIsNoamPeak) {
  ASSERT_EQ(Cli("train-lm " + Common("lrlog") + " --set train.lr_factor=0.5").code, 0);
  std::ifstream log(Root() / "lrlog" / "lm" / "train.log");
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "stage\tepoch\tstep\tlr\tloss");
  bool found = false;
  while (std::getline(log, line)) {
    std::istringstream fields(line);
    std::string stage, epoch, step, lr;
    std::getline(fields, stage, '\t');
    std::getline(fields, epoch, '\t');
    std::getline(fields, step, '\t');
    std::getline(fields, lr, '\t');
    if (step == "3") {
      found = true;
      EXPECT_NEAR(std::stod(lr), NoamLr(3, NoamSchedule{8, 3, 0.5}), 1e-15);
      EXPECT_NEAR(std::stod(lr), 0.5 * std::pow(8.0, -0.5) * std::pow(3.0, -0.5), 1e-15);
    }
  }
  EXPECT_TRUE(found);
}

TEST_F(CliTest, DecodeEvalBenchAndAveraging) {
  ASSERT_EQ(Cli("finetune --mode scratch " + Common("dec")).code, 0);
  ASSERT_EQ(Cli("train-ar " + Common("dec")).code, 0);
  const std::string dir = (Root() / "dec" / "finetune-scratch").string();
  const std::string manifest = (fs::path(Data()) / "dev" / "manifest.jsonl").string();
  const auto ckpts = EpochCheckpoints(dir);
  ASSERT_EQ(ckpts.size(), 3u);

  const std::string base = " " + Common("dec") + " --manifest " + manifest;
  ASSERT_EQ(Cli("decode --checkpoint " + ckpts.back() + base + " --hyp " +
                (Root() / "h_last.tsv").string()).code, 0);
  ASSERT_EQ(Cli("decode --checkpoint " + dir + " --average-last 1" + base + " --hyp " +
                (Root() / "h_avg1.tsv").string()).code, 0);
  EXPECT_EQ(Slurp(Root() / "h_last.tsv"), Slurp(Root() / "h_avg1.tsv"));
  EXPECT_EQ(Cli("decode --checkpoint " + dir + " --average-last 3" + base + " --hyp " +
                (Root() / "h_avg3.tsv").string()).code, 0);
  EXPECT_EQ(Cli("decode --checkpoint " + dir + " --average-last 4" + base + " --hyp " +
                (Root() / "h_avg4.tsv").string()).code, 2);

  ASSERT_EQ(Cli("eval --checkpoint " + dir + base + " --report " +
                (Root() / "rep").string()).code, 0);
  EXPECT_TRUE(fs::exists(Root() / "rep" / "summary.tsv"));
  EXPECT_TRUE(fs::exists(Root() / "rep" / "details.jsonl"));
  ASSERT_EQ(Cli("eval --baseline ar --checkpoint " + (Root() / "dec" / "ar").string() + base +
                " --report " + (Root() / "rep_ar").string()).code, 0);

  Outcome b = Cli("bench --checkpoint " + dir + " --ar-checkpoint " +
                  (Root() / "dec" / "ar").string() + base + " --report " +
                  (Root() / "bench.tsv").string());
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string report = Slurp(Root() / "bench.tsv");
  for (const char* field : {"rtf_nar\t", "rtf_ar\t", "ratio\t", "nar_forwards\t3\n"})
    EXPECT_NE(report.find(field), std::string::npos) << field;
}

TEST_F(CliTest, IncompatibleCheckpointNamesTensor) {
  ASSERT_EQ(Cli("finetune --mode scratch " + Common("compat")).code, 0);
  Checkpoint c = LoadCheckpoint(
      EpochCheckpoints((Root() / "compat" / "finetune-scratch").string()).back());
  c.metadata["encoder.d_ff"] = "24";
  SaveCheckpoint((Root() / "tampered.ckpt").string(), c);
  Outcome o = Cli("decode --checkpoint " + (Root() / "tampered.ckpt").string() + " " +
                  Common("compat") + " --manifest " +
                  (fs::path(Data()) / "dev" / "manifest.jsonl").string() + " --hyp " +
                  (Root() / "t.tsv").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("encoder.pre.0.ffn"), std::string::npos) << o.err;
  Outcome wrong = Cli("decode --baseline ar --checkpoint " +
                      (Root() / "tampered.ckpt").string() + " " + Common("compat") +
                      " --manifest " + (fs::path(Data()) / "dev" / "manifest.jsonl").string() +
                      " --hyp " + (Root() / "t.tsv").string());
  EXPECT_EQ(wrong.code, 2);
}

}  // namespace
}  // namespace narasr
