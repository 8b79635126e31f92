// tests/corpus_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "narasr/corpus.h"
#include "narasr/errors.h"
#include "narasr/features.h"

namespace narasr {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("narasr_" + name);
  fs::remove_all(p);
  return p;
}

SyntheticTaskSpec TinySpec() {
  SyntheticTaskSpec s;
  s.train_count = 12;
  s.dev_count = 3;
  s.test_count = 2;
  s.lm_sentences = 20;
  return s;
}

TEST(CorpusTest, SameSeedSameBytes) {
  fs::path a = TempDir("corpus_a"), b = TempDir("corpus_b");
  GenerateSyntheticCorpus(TinySpec(), 7, a.string());
  GenerateSyntheticCorpus(TinySpec(), 7, b.string());
  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(Slurp(entry.path()), Slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 12 + 3 + 2 + 3 + 2);  // wavs, manifests, vocab, lm text
  Manifest m = ReadManifest((a / "train" / "manifest.jsonl").string());
  EXPECT_EQ(m.records.size(), 12u);
  EXPECT_EQ(ReadManifest((a / "dev" / "manifest.jsonl").string()).records.size(), 3u);
  fs::path c = TempDir("corpus_c");
  GenerateSyntheticCorpus(TinySpec(), 8, c.string());
  EXPECT_NE(Slurp(a / "train" / "manifest.jsonl"), Slurp(c / "train" / "manifest.jsonl"));
  for (const fs::path& p : {a, b, c}) fs::remove_all(p);
}

TEST(CorpusTest, DurationMatchesWaveform) {
  SyntheticTaskSpec spec;
  Waveform w = SynthesizeUtterance(spec, 1, "x", "abcde");
  EXPECT_EQ(w.samples.size(), 5u * 1920u);
  EXPECT_NEAR(w.duration_sec(), 0.6, 1.0 / 16000);
}

TEST(CorpusTest, TranscriptLengthsInRange) {
  SyntheticTaskSpec spec;
  for (int i = 0; i < 500; ++i) {
    const std::string t = SyntheticTranscript(spec, 3, "u" + std::to_string(i));
    EXPECT_GE(t.size(), 4u);
    EXPECT_LE(t.size(), 10u);
    for (char c : t) {
      EXPECT_GE(c, 'a');
      EXPECT_LT(c, 'a' + 16);
    }
  }
}

TEST(CorpusTest, SingleTokenArgmaxAtNearestMelBin) {
  SyntheticTaskSpec spec;
  auto nearest_bin = [](double hz) {
    int best = 0;
    for (int b = 1; b < 80; ++b)
      if (std::abs(MelBinCenterHz(b, 80, 16000) - hz) <
          std::abs(MelBinCenterHz(best, 80, 16000) - hz))
        best = b;
    return best;
  };
  for (int token = 0; token < spec.vocab_size; ++token) {
    const std::string text(1, static_cast<char>('a' + token));
    FeatureSequence f = LogMelFeatures(SynthesizeUtterance(spec, 2, "t", text), {});
    const int t = f.num_frames() / 2;
    int best = 0;
    for (int b = 1; b < 80; ++b)
      if (f.frames.at(t, b) > f.frames.at(t, best)) best = b;
    const int nearest = nearest_bin(spec.ToneHz(token));
    // The 512-point FFT samples the spectrum every 31.25 Hz, about the
    // spacing of adjacent filters here, so a tone halfway between two FFT
    // points (token 'f', 587 Hz) can land one filter low.
    if (token == 5) {
      EXPECT_LE(std::abs(best - nearest), 1) << text;
    } else {
      EXPECT_EQ(best, nearest) << text;
    }
  }
}

TEST(CorpusTest, ToneAboveNyquistIsSpecError) {
  SyntheticTaskSpec spec;
  spec.tone_base_hz = 7900;
  try {
    spec.Validate();
    FAIL();
  } catch (const SpecError& e) {
    EXPECT_NE(std::string(e.what()).find("tone_base_hz"), std::string::npos);
  }
}

Manifest Make(const std::vector<double>& durations,
              const std::vector<std::string>& texts = {}) {
  Manifest m;
  for (size_t i = 0; i < durations.size(); ++i) {
    m.records.push_back({"u" + std::to_string(i), "x.wav", durations[i],
                         texts.empty() ? "abc" : texts[i]});
  }
  return m;
}

TEST(StatsTest, Examples) {
  CorpusStats s = ComputeCorpusStats(Make({4.5}, {std::string(14, 'a')}));
  EXPECT_EQ(s.utterances, 1);
  EXPECT_EQ(s.duration_min, 4.5);
  EXPECT_EQ(s.duration_max, 4.5);
  EXPECT_EQ(s.duration_avg, 4.5);
  EXPECT_EQ(s.tokens_min, 14);
  EXPECT_EQ(s.tokens_avg, 14);
  CorpusStats t = ComputeCorpusStats(Make({1.0, 3.0}));
  EXPECT_DOUBLE_EQ(t.duration_avg, 2.0);
  EXPECT_DOUBLE_EQ(t.hours, 4.0 / 3600.0);
  EXPECT_THROW(ComputeCorpusStats(Manifest{}), ContractError);
  const std::string table = FormatCorpusStats(t);
  for (const char* label :
       {"#Utterances", "#Hours", "#Speakers", "Duration (Sec.) Min.",
        "Duration (Sec.) Max.", "Duration (Sec.) Avg.", "#Tokens/Sentence Min.",
        "#Tokens/Sentence Max.", "#Tokens/Sentence Avg."})
    EXPECT_NE(table.find(label), std::string::npos) << label;
}

TEST(BatchTest, Examples) {
  auto batches = BatchByDuration(Make(std::vector<double>(100, 4.5)), 100.0, 1);
  int full = 0;
  for (const auto& b : batches) {
    EXPECT_LE(b.size(), 22u);
    full += b.size() == 22;
  }
  EXPECT_EQ(full, 4);
  EXPECT_EQ(BatchByDuration(Make({3.0}), 10.0, 1).size(), 1u);
  try {
    BatchByDuration(Make({3.0, 12.0}), 10.0, 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("u1"), std::string::npos);
  }
}

TEST(BatchTest, PartitionProperty) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(rng.UniformInt(1, 60));
    for (double& x : d) x = rng.Uniform(0.2, 5.0);
    Manifest m = Make(d);
    const double budget = rng.Uniform(5.0, 30.0);
    auto batches = BatchByDuration(m, budget, trial);
    std::multiset<int> seen;
    for (const auto& b : batches) {
      double total = 0;
      for (int i : b) {
        seen.insert(i);
        total += d[i];
      }
      EXPECT_LE(total, budget);
    }
    ASSERT_EQ(seen.size(), d.size());
    for (size_t i = 0; i < d.size(); ++i) EXPECT_EQ(seen.count(static_cast<int>(i)), 1u);
  }
}

TEST(ManifestTest, RoundTripAndErrors) {
  fs::path dir = TempDir("manifest");
  fs::create_directories(dir);
  const std::string path = (dir / "m.jsonl").string();
  Manifest m = Make({1.25, 2.5}, {"ab", "你好"});
  WriteManifest(path, m.records);
  Manifest r = ReadManifest(path);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[1].text, "你好");
  EXPECT_EQ(r.records[0].duration_sec, 1.25);
  EXPECT_EQ(r.ResolveAudio(r.records[0]), (dir / "x.wav").string());
  {
    std::ofstream out(path);
    out << R"({"id":"a","audio_path":"a.wav","duration_sec":1.0,"text":"x"})" << "\n";
    out << R"({"id":"b","audio_path":"b.wav","text":"x"})" << "\n";
  }
  try {
    ReadManifest(path);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace narasr
