// narasr/decode.h

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

#ifndef NARASR_DECODE_H_
#define NARASR_DECODE_H_

#include <functional>
#include <string>
#include <vector>

#include "narasr/ar_decoder.h"
#include "narasr/checkpoint.h"
#include "narasr/corpus.h"
#include "narasr/decoder.h"
#include "narasr/encoder.h"
#include "narasr/features.h"
#include "narasr/vocab.h"

namespace narasr {

struct NarModel {
  EncoderParams encoder;
  DecoderParams decoder;
};

struct ArModel {
  EncoderParams encoder;  // only the CNN and pre-alignment stack are used
  ArDecoderParams ar;
  int max_len = 60;       // cap on the output length including [CLS]
};

// Rebuilds a model from the configuration stored in checkpoint metadata.
NarModel LoadNarModel(const Checkpoint& ckpt);
ArModel LoadArModel(const Checkpoint& ckpt, int max_len);

// Sets the BLAS worker count. Timing runs use 1.
void SetComputeThreads(int threads);

struct DecodeResult {
  std::string utterance_id;
  std::string hypothesis;
  std::vector<int> ids;           // raw output ids
  std::vector<double> top_probs;  // per-position top-1 probability (NAR only)
  double wall_time_sec = 0.0;
  int forwards = 0;               // model forward passes spent
};

// One encoder pass, one decoder pass, per-position argmax, then Decode.
DecodeResult NarGreedyDecode(const FeatureSequence& features, const NarModel& model,
                             const Vocabulary& vocab);

// Pads the batch to its longest utterance and masks the padding, so the
// hypotheses equal those of one-at-a-time decoding.
std::vector<DecodeResult> NarGreedyDecodeBatch(
    const std::vector<FeatureSequence>& batch, const NarModel& model,
    const Vocabulary& vocab);

// Token-by-token greedy decoding without a cache.
DecodeResult ArGreedyDecodeUtterance(const FeatureSequence& features,
                                     const ArModel& model, const Vocabulary& vocab);

struct CerResult {
  double rate = 0.0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int distance = 0;
  int ref_len = 0;
  bool degenerate = false;  // empty reference, non-empty hypothesis
};

// Unit-cost Levenshtein distance over UTF-8 characters. The backtrace
// prefers substitution (or match), then deletion, then insertion.
CerResult Cer(const std::string& reference, const std::string& hypothesis);
int EditDistance(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Σ wall / Σ audio. Throws ContractError when the audio total is not positive.
double RtfFromTotals(double wall_sec, double audio_sec);

// Times decode(i) for every i, after one untimed warm-up call on item 0.
double MeasureRtf(const std::function<void(size_t)>& decode,
                  const std::vector<double>& durations_sec, bool warm_up = true);

using DecodeFn = std::function<DecodeResult(const FeatureSequence&)>;

struct UtteranceScore {
  std::string id;
  std::string reference;
  std::string hypothesis;
  CerResult cer;
  std::vector<double> top_probs;
  double wall_time_sec = 0.0;
  int forwards = 0;
  std::string error;  // non-empty when the utterance could not be decoded
};

struct ScoreReport {
  double cer = 0.0;  // micro average: total edits / total reference chars
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long ref_chars = 0;
  int utterances = 0;
  int failures = 0;
  double audio_sec = 0.0;     // over successfully decoded utterances
  double decode_sec = 0.0;    // model time only
  double frontend_sec = 0.0;  // wav reading and features, reported apart
  double rtf = 0.0;
  std::vector<UtteranceScore> details;
};

// Decodes every utterance in manifest order. Failures are recorded and the
// run continues. Throws ContractError on an empty manifest.
ScoreReport Evaluate(const Manifest& manifest, const DecodeFn& decode,
                     const FbankOptions& fbank, bool warm_up = true);

// Writes <dir>/summary.tsv and <dir>/details.jsonl, which hold no timing and
// are reproducible byte for byte, plus <dir>/timing.tsv.
void WriteReport(const ScoreReport& report, const std::string& dir);

}  // namespace narasr

#endif  // NARASR_DECODE_H_
