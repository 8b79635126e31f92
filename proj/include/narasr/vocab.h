// narasr/vocab.h

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

#ifndef NARASR_VOCAB_H_
#define NARASR_VOCAB_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace narasr {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecials = 5;

// Splits UTF-8 text into code points, one string per code point. Throws
// InputError on malformed input.
std::vector<std::string> SplitUtf8(std::string_view text);

class Vocabulary {
 public:
  // Specials only.
  Vocabulary();

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const;
  // Returns kUnkId for unknown tokens.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const {
    return ids_.count(token) != 0;
  }
  static bool IsSpecial(int id) { return id >= 0 && id < kNumSpecials; }

  // Appends a token if new; returns its id.
  int Add(const std::string& token);

  const std::vector<std::string>& tokens() const { return tokens_; }

  void Write(const std::string& path) const;
  static Vocabulary Read(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Specials at ids 0..4, then distinct characters in order of first appearance.
// Throws InputError on an empty corpus.
Vocabulary BuildVocab(const std::vector<std::string>& corpus);

struct TokenSequence {
  std::vector<int> ids;  // length L'
  int true_length = 0;   // count of non-PAD ids, [CLS] and [SEP] included
};

// [CLS] chars [SEP] [PAD]...; throws LengthError if the text needs more than
// target_len slots.
TokenSequence Encode(std::string_view text, const Vocabulary& vocab,
                     int target_len);

// Concatenates non-special tokens up to the first [SEP]. Throws IndexError on
// an id outside the vocabulary.
std::string Decode(const std::vector<int>& ids, const Vocabulary& vocab);

}  // namespace narasr

#endif  // NARASR_VOCAB_H_
