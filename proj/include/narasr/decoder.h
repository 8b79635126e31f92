// narasr/decoder.h

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

#ifndef NARASR_DECODER_H_
#define NARASR_DECODER_H_

#include <vector>

#include "narasr/nn.h"
#include "narasr/params.h"
#include "narasr/rng.h"
#include "narasr/tensor.h"
#include "narasr/vocab.h"

namespace narasr {

struct DecoderConfig {
  int d_n = 768;
  int layers = 4;
  int heads = 8;
  int d_ff = 2048;
  int max_positions = 64;
  int vocab_size = 0;
  double dropout = 0.1;

  void Validate() const;  // throws ConfigError
};

struct DecoderParams {
  DecoderConfig config;
  Tensor token_embedding;     // [V x d_n]
  Tensor position_embedding;  // [max_positions x d_n]
  Tensor segment_embedding;   // [2 x d_n]
  Tensor emb_norm_gain, emb_norm_bias;
  std::vector<TransformerLayerParams> layers;  // post-norm, relu
  Tensor head_w, head_b;                       // [d_n x V], [V]

  static DecoderParams Create(const DecoderConfig& config, Rng& rng);
  // Names are prefixed with "decoder.", e.g. decoder.layer.3.attn.W_q.
  void Register(ParamSet* set) const;
};

// Treats the rows of `inputs` as token embeddings. Returns logits [L x V].
// Throws LengthError when L exceeds max_positions.
Tensor DecoderForward(const Tensor& inputs, const DecoderParams& params,
                      bool training, Rng& rng);

// Ordinary token-embedding lookup followed by DecoderForward.
Tensor DecoderForwardTokens(const std::vector<int>& ids,
                            const DecoderParams& params, bool training,
                            Rng& rng);

// Per-position argmax; ties go to the lowest id.
std::vector<int> ClassifyPositions(const Tensor& logits);

enum class MlmAction { kMask, kRandom, kKeep };

struct MlmSample {
  std::vector<int> original;
  std::vector<int> corrupted;
  std::vector<int> positions;      // selected positions, ascending
  std::vector<MlmAction> actions;  // parallel to positions
};

// Selects each non-special position with probability mask_rate; a selected
// position becomes [MASK] (80%), a random non-special id (10%) or stays as is
// (10%). Throws ContractError unless 0 < mask_rate < 1.
MlmSample MlmCorrupt(const TokenSequence& tokens, double mask_rate,
                     int vocab_size, Rng& rng);

// Cross entropy over the selected positions only. Throws ContractError when
// nothing was selected.
Tensor MlmLoss(const MlmSample& sample, const DecoderParams& params,
               bool training, Rng& rng);

}  // namespace narasr

#endif  // NARASR_DECODER_H_
