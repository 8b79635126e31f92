// src/vocab.cc

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

#include "narasr/vocab.h"

#include <fstream>

#include "narasr/errors.h"

namespace narasr {

std::vector<std::string> SplitUtf8(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    size_t len;
    if (lead < 0x80) {
      len = 1;
    } else if ((lead & 0xe0) == 0xc0) {
      len = 2;
    } else if ((lead & 0xf0) == 0xe0) {
      len = 3;
    } else if ((lead & 0xf8) == 0xf0) {
      len = 4;
    } else {
      throw InputError("malformed UTF-8 at byte " + std::to_string(i));
    }
    if (i + len > text.size()) throw InputError("truncated UTF-8 sequence");
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xc0) != 0x80)
        throw InputError("malformed UTF-8 at byte " + std::to_string(i + k));
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"}) Add(s);
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(size()));
  }
  return tokens_[id];
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

int Vocabulary::Add(const std::string& token) {
  if (token.empty() || token.find('\n') != std::string::npos) {
    throw InputError("vocabulary tokens must be non-empty single lines");
  }
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

void Vocabulary::Write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write vocabulary " + path);
  for (const std::string& t : tokens_) out << t << '\n';
  if (!out) throw InputError("failed writing " + path);
}

Vocabulary Vocabulary::Read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open vocabulary " + path);
  Vocabulary vocab;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    if (line_no < kNumSpecials) {
      if (line != vocab.tokens_[line_no]) {
        throw InputError(path + ": line " + std::to_string(line_no + 1) +
                         " should be " + vocab.tokens_[line_no]);
      }
    } else if (vocab.Add(line) != line_no) {
      throw InputError(path + ": duplicate token '" + line + "'");
    }
    ++line_no;
  }
  if (line_no < kNumSpecials) throw InputError(path + ": missing special tokens");
  return vocab;
}

Vocabulary BuildVocab(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  Vocabulary vocab;
  for (const std::string& text : corpus)
    for (const std::string& ch : SplitUtf8(text)) vocab.Add(ch);
  return vocab;
}

TokenSequence Encode(std::string_view text, const Vocabulary& vocab,
                     int target_len) {
  const std::vector<std::string> chars = SplitUtf8(text);
  const int needed = static_cast<int>(chars.size()) + 2;
  if (needed > target_len) {
    throw LengthError("transcript of " + std::to_string(chars.size()) +
                      " tokens needs " + std::to_string(needed) +
                      " slots but L' is " + std::to_string(target_len));
  }
  TokenSequence seq;
  seq.ids.assign(target_len, kPadId);
  seq.ids[0] = kClsId;
  for (size_t i = 0; i < chars.size(); ++i) seq.ids[i + 1] = vocab.id(chars[i]);
  seq.ids[needed - 1] = kSepId;
  seq.true_length = needed;
  return seq;
}

std::string Decode(const std::vector<int>& ids, const Vocabulary& vocab) {
  for (int id : ids) vocab.token(id);  // validates every id
  std::string text;
  for (int id : ids) {
    if (id == kSepId) break;
    if (!Vocabulary::IsSpecial(id)) text += vocab.token(id);
  }
  return text;
}

}  // namespace narasr
