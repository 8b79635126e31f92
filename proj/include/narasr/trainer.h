// narasr/trainer.h

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

#ifndef NARASR_TRAINER_H_
#define NARASR_TRAINER_H_

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "narasr/ar_decoder.h"
#include "narasr/checkpoint.h"
#include "narasr/corpus.h"
#include "narasr/decoder.h"
#include "narasr/encoder.h"
#include "narasr/features.h"
#include "narasr/optim.h"
#include "narasr/vocab.h"

namespace narasr {

struct TrainHyper {
  int epochs = 30;
  double batch_seconds = 20.0;
  int accumulation = 1;
  double label_smoothing = 0.1;
  uint64_t seed = 1;
  int warmup_steps = 400;
  double lr_factor = 1.0;
  long max_updates = 0;  // 0: no cap
  bool exclude_pad = false;
  SpecAugmentPolicy specaug;
  double mlm_mask_rate = 0.15;
  int mlm_batch_sentences = 32;
};

struct PreparedUtterance {
  std::string id;
  Tensor features;  // [T x F]
  TokenSequence tokens;
  double duration_sec = 0.0;
};

struct Dataset {
  Manifest manifest;
  std::vector<PreparedUtterance> utterances;  // parallel to manifest.records
};

// Reads every waveform, extracts features and encodes transcripts to L'.
Dataset PrepareDataset(const Manifest& manifest, const Vocabulary& vocab,
                       int target_len, const FbankOptions& fbank);

// One optimization run shared by every stage. Each utterance loss is
// back-propagated on its own; gradients add up over the `accumulation`
// batches of an update (sum reduction), then Adam takes one step.
struct TrainingLoop {
  std::string stage;
  ParamSet trainable;
  ParamSet saved;  // written to the per-epoch checkpoints
  std::function<std::vector<std::vector<int>>(int epoch)> batches;
  // Loss for one item; an undefined tensor skips the item.
  std::function<Tensor(int item, Rng& rng)> loss;
  NoamSchedule schedule;
  int epochs = 1;
  int accumulation = 1;
  long max_updates = 0;
  uint64_t seed = 1;
  std::string checkpoint_dir;  // empty: no checkpoints
  std::map<std::string, std::string> metadata;
  std::ostream* log = nullptr;  // TSV: stage epoch step lr loss
};

struct LoopResult {
  long updates = 0;
  double first_loss = 0.0;  // mean item loss of the first update
  double last_loss = 0.0;   // mean item loss of the last update
  std::vector<double> update_losses;
  std::vector<std::string> checkpoints;
};

LoopResult RunTrainingLoop(const TrainingLoop& loop);

// Metadata helpers so that a checkpoint can rebuild its model.
void PutConfig(const EncoderConfig& c, std::map<std::string, std::string>* meta);
void PutConfig(const DecoderConfig& c, std::map<std::string, std::string>* meta);
void PutConfig(const ArDecoderConfig& c, std::map<std::string, std::string>* meta);
EncoderConfig EncoderConfigFrom(const std::map<std::string, std::string>& meta);
DecoderConfig DecoderConfigFrom(const std::map<std::string, std::string>& meta);
ArDecoderConfig ArDecoderConfigFrom(const std::map<std::string, std::string>& meta);

// Masked-LM pretraining of the decoder on plain sentences.
LoopResult TrainMlm(DecoderParams* decoder, const std::vector<TokenSequence>& sentences,
                    const TrainHyper& hyper, const std::string& checkpoint_dir,
                    std::ostream* log);

// Encoder pretraining with a temporary head initialized to the transpose of
// `token_embedding`; the head trains with the encoder and is dropped.
LoopResult PretrainEncoder(EncoderParams* encoder, const Tensor& token_embedding,
                           const Dataset& data, const TrainHyper& hyper,
                           const std::string& checkpoint_dir, std::ostream* log);

enum class FinetuneMode { kFull, kNoEncoderPretrain, kNoDecoderPretrain, kScratch };
FinetuneMode ParseFinetuneMode(const std::string& text);  // throws ConfigError
const char* ToString(FinetuneMode mode);

// Per-utterance label-smoothed NLL of the full model over L' positions.
Tensor NarLoss(const PreparedUtterance& utt, const EncoderParams& encoder,
               const DecoderParams& decoder, const TrainHyper& hyper,
               bool training, Rng& rng);

struct FinetuneInit {
  EncoderParams encoder;
  DecoderParams decoder;
};

// Builds the starting point of a fine-tuning run. Parts the mode does not
// take from a checkpoint are freshly initialized from `seed`. Throws
// ConfigError when the mode needs a checkpoint that is not given.
FinetuneInit InitializeForFinetune(FinetuneMode mode,
                                   const EncoderConfig& encoder_config,
                                   const DecoderConfig& decoder_config,
                                   const Checkpoint* encoder_pretrained,
                                   const Checkpoint* decoder_pretrained,
                                   uint64_t seed);

LoopResult Finetune(EncoderParams* encoder, DecoderParams* decoder,
                    const Dataset& data, const TrainHyper& hyper,
                    const std::string& checkpoint_dir, std::ostream* log,
                    const std::map<std::string, std::string>& extra_meta = {});

// Teacher-forced training of the autoregressive baseline. Only the
// acoustic part of `encoder` is used and trained.
Tensor ArLoss(const PreparedUtterance& utt, const EncoderParams& encoder,
              const ArDecoderParams& ar, const TrainHyper& hyper, bool training,
              Rng& rng);
LoopResult TrainAr(EncoderParams* encoder, ArDecoderParams* ar,
                   const Dataset& data, const TrainHyper& hyper,
                   const std::string& checkpoint_dir, std::ostream* log);

}  // namespace narasr

#endif  // NARASR_TRAINER_H_
