// tests/vocab_test.cc

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "narasr/errors.h"
#include "narasr/rng.h"
#include "narasr/vocab.h"

namespace narasr {
namespace {

TEST(VocabTest, BuildOrderAndSpecials) {
  Vocabulary v = BuildVocab({"ab", "ba"});
  EXPECT_EQ(v.size(), 7);
  EXPECT_EQ(v.id("a"), 5);
  EXPECT_EQ(v.id("b"), 6);
  EXPECT_EQ(v.token(kPadId), "[PAD]");
  EXPECT_EQ(v.token(kUnkId), "[UNK]");
  EXPECT_EQ(v.token(kClsId), "[CLS]");
  EXPECT_EQ(v.token(kSepId), "[SEP]");
  EXPECT_EQ(v.token(kMaskId), "[MASK]");
  EXPECT_EQ(BuildVocab({"a", "a"}).tokens(), BuildVocab({"a"}).tokens());
  EXPECT_THROW(BuildVocab({}), InputError);
}

TEST(VocabTest, Utf8CodePoints) {
  Vocabulary v = BuildVocab({"你好a"});
  EXPECT_EQ(v.size(), 8);
  EXPECT_EQ(v.token(5), "你");
  EXPECT_EQ(Decode(Encode("好你", v, 5).ids, v), "好你");
  EXPECT_THROW(SplitUtf8("\xff"), InputError);
}

TEST(EncodeTest, Examples) {
  Vocabulary v = BuildVocab({"ab"});
  TokenSequence s = Encode("ab", v, 6);
  EXPECT_EQ(s.ids, (std::vector<int>{kClsId, 5, 6, kSepId, kPadId, kPadId}));
  EXPECT_EQ(s.true_length, 4);
  EXPECT_EQ(Encode("", v, 4).ids,
            (std::vector<int>{kClsId, kSepId, kPadId, kPadId}));
  EXPECT_EQ(Encode("az", v, 5).ids[2], kUnkId);
  try {
    Encode(std::string(59, 'a'), v, 60);
    FAIL() << "expected LengthError";
  } catch (const LengthError& e) {
    EXPECT_NE(std::string(e.what()).find("61"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("60"), std::string::npos);
  }
  EXPECT_EQ(Encode(std::string(58, 'a'), v, 60).true_length, 60);
}

TEST(DecodeTest, Examples) {
  Vocabulary v = BuildVocab({"ab"});
  EXPECT_EQ(Decode({kClsId, 5, 6, kSepId, kPadId}, v), "ab");
  EXPECT_EQ(Decode({kClsId, kSepId}, v), "");
  EXPECT_EQ(Decode({kClsId, 5, kSepId, 6}, v), "a");
  EXPECT_THROW(Decode({kClsId, 99}, v), IndexError);
  EXPECT_THROW(Decode({kClsId, -1}, v), IndexError);
}

TEST(EncodeTest, RandomRoundTrip) {
  const std::string alphabet = "abcdefghijklmnop";
  Vocabulary v = BuildVocab({alphabet});
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const int target = rng.UniformInt(2, 64);
    const int len = rng.UniformInt(0, target - 2);
    std::string text;
    for (int i = 0; i < len; ++i) text += alphabet[rng.UniformInt(0, 15)];
    TokenSequence s = Encode(text, v, target);
    ASSERT_EQ(static_cast<int>(s.ids.size()), target);
    EXPECT_EQ(s.ids[0], kClsId);
    EXPECT_EQ(s.ids[s.true_length - 1], kSepId);
    for (int i = s.true_length; i < target; ++i) EXPECT_EQ(s.ids[i], kPadId);
    EXPECT_EQ(Decode(s.ids, v), text);
  }
}

TEST(VocabTest, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "narasr_vocab_test.txt").string();
  Vocabulary v = BuildVocab({"hello world", "çé"});
  v.Write(path);
  Vocabulary r = Vocabulary::Read(path);
  EXPECT_EQ(r.tokens(), v.tokens());
  const std::string path2 = (dir / "narasr_vocab_test2.txt").string();
  r.Write(path2);
  std::ifstream a(path), b(path2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

}  // namespace
}  // namespace narasr
