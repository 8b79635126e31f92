// narasr/pipeline.h

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

#ifndef NARASR_PIPELINE_H_
#define NARASR_PIPELINE_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "narasr/config.h"
#include "narasr/decode.h"
#include "narasr/trainer.h"

namespace narasr {

// Merged view of every stage's settings. `values` always holds the full
// effective key set, so persisting it is enough to re-run a stage.
struct RunConfig {
  KeyValueConfig values;

  uint64_t seed = 1;
  std::string out_dir;
  std::string train_manifest, dev_manifest, test_manifest, vocab_path, lm_text;
  EncoderConfig encoder;
  DecoderConfig decoder;  // vocab_size comes from the vocabulary file
  ArDecoderConfig ar;
  int ar_max_len = 0;
  FbankOptions fbank;

  // Defaults, then the file (if any), then `overrides` ("key=value"), later
  // ones winning. Unknown keys and invalid values throw ConfigError.
  static RunConfig Load(const std::string& path,
                        const std::vector<std::string>& overrides);

  // Hyperparameters for one stage: "lm", "pretrain", "finetune" or "ar".
  TrainHyper Hyper(const std::string& stage) const;

  // Writes <dir>/run_config.txt.
  void Persist(const std::string& dir) const;
};

// Default effective configuration as "key = value" text.
std::string DefaultConfigText();

// Stage output directories under out_dir.
std::string StageDir(const RunConfig& cfg, const std::string& stage);
std::string FinetuneDir(const RunConfig& cfg, FinetuneMode mode);

// epoch-N.ckpt files of a directory in increasing N.
std::vector<std::string> EpochCheckpoints(const std::string& dir);

// `path` is a checkpoint file or a stage directory (its last epoch is used).
// With average_last > 1 the K epoch checkpoints ending at the chosen one
// are averaged. Throws ConfigError when something is missing.
Checkpoint ResolveCheckpoint(const std::string& path, int average_last);

struct StageOutcome {
  std::string dir;
  LoopResult result;
};

StageOutcome RunTrainLm(const RunConfig& cfg);
StageOutcome RunPretrainEncoder(const RunConfig& cfg);
StageOutcome RunFinetune(const RunConfig& cfg, FinetuneMode mode);
StageOutcome RunTrainAr(const RunConfig& cfg);

enum class Baseline { kNar, kAr };
Baseline ParseBaseline(const std::string& text);  // "nar" or "ar"

// Decodes a manifest with a NAR (encoder + decoder) or AR checkpoint.
// ar_max_len caps AR outputs.
ScoreReport EvaluateCheckpoint(const Checkpoint& ckpt, Baseline baseline,
                               const Manifest& manifest, const Vocabulary& vocab,
                               int ar_max_len);

// Hypotheses as "id<TAB>text" lines in manifest order.
void WriteHypotheses(const ScoreReport& report, const std::string& path);

struct BenchReport {
  int utterances = 0;
  double audio_sec = 0.0;
  double rtf_nar = 0.0;
  double rtf_ar = 0.0;
  double ratio = 0.0;  // rtf_ar / rtf_nar
  long nar_forwards = 0;
  long ar_forwards = 0;
  long ar_output_tokens = 0;  // generated ids, [SEP] included
};

// Single-threaded timing of both decoders on precomputed features.
BenchReport RunBench(const Checkpoint& nar, const Checkpoint& ar,
                     const Manifest& manifest, const Vocabulary& vocab, int ar_max_len);
void WriteBenchReport(const BenchReport& report, const std::string& path);

}  // namespace narasr

#endif  // NARASR_PIPELINE_H_
