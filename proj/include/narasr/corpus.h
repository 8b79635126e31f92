// narasr/corpus.h

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

#ifndef NARASR_CORPUS_H_
#define NARASR_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "narasr/config.h"
#include "narasr/wav.h"

namespace narasr {

struct UtteranceRecord {
  std::string id;
  std::string audio_path;  // as written in the manifest
  double duration_sec = 0.0;
  std::string text;
};

struct Manifest {
  std::string path;  // file it was read from; relative audio paths resolve
                     // against its directory
  std::vector<UtteranceRecord> records;

  std::string ResolveAudio(const UtteranceRecord& rec) const;
};

// JSON lines with exactly the fields id, audio_path, duration_sec, text.
// Throws InputError with the line number on malformed rows or duplicate ids.
Manifest ReadManifest(const std::string& path);
void WriteManifest(const std::string& path,
                   const std::vector<UtteranceRecord>& records);

struct SyntheticTaskSpec {
  int vocab_size = 16;  // ordinary tokens 'a', 'b', ...
  int min_tokens = 4;
  int max_tokens = 10;
  double tone_base_hz = 440.0;
  double tone_step_ratio = 1.0594630943592953;  // 2^(1/12)
  double token_duration_ms = 120.0;
  double tone_amplitude = 0.5;
  double noise_amplitude = 0.01;
  int sample_rate = 16000;
  int train_count = 800;
  int dev_count = 100;
  int test_count = 100;
  // Transcripts follow a first-order chain: with probability
  // grammar_strength the next token is one of `successors` tokens fixed per
  // preceding token, otherwise uniform. Gives the language model something to
  // learn.
  int successors = 3;
  double grammar_strength = 0.9;
  int lm_sentences = 4000;

  static SyntheticTaskSpec FromConfig(const KeyValueConfig& cfg);
  // Throws SpecError naming the offending field.
  void Validate() const;
  std::string Alphabet() const;  // the token characters in id order
  double ToneHz(int token) const;
};

// Deterministic function of (spec, seed, id).
std::string SyntheticTranscript(const SyntheticTaskSpec& spec, uint64_t seed,
                                const std::string& id);
Waveform SynthesizeUtterance(const SyntheticTaskSpec& spec, uint64_t seed,
                             const std::string& id, const std::string& text);

// Writes <out>/{train,dev,test}/manifest.jsonl with wav/ subdirectories,
// <out>/vocab.txt and <out>/lm_text.txt (one sentence per line, drawn from
// the same chain as the transcripts but disjoint seeds).
void GenerateSyntheticCorpus(const SyntheticTaskSpec& spec, uint64_t seed,
                             const std::string& out_dir);

struct CorpusStats {
  long utterances = 0;
  double hours = 0.0;
  double duration_min = 0.0, duration_max = 0.0, duration_avg = 0.0;
  double tokens_min = 0.0, tokens_max = 0.0, tokens_avg = 0.0;
};

// Throws ContractError on an empty manifest.
CorpusStats ComputeCorpusStats(const Manifest& manifest);
// The nine-row statistics block. Speaker counts are not tracked and print n/a.
std::string FormatCorpusStats(const CorpusStats& stats);

// Sorted by duration, packed greedily under the budget, batch order shuffled
// with the seed. Each batch lists indices into manifest.records. Throws
// ConfigError naming an utterance longer than the budget.
std::vector<std::vector<int>> BatchByDuration(const Manifest& manifest,
                                              double budget_seconds,
                                              uint64_t seed);

}  // namespace narasr

#endif  // NARASR_CORPUS_H_
