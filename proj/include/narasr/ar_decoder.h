// narasr/ar_decoder.h

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

#ifndef NARASR_AR_DECODER_H_
#define NARASR_AR_DECODER_H_

#include <vector>

#include "narasr/nn.h"
#include "narasr/params.h"
#include "narasr/rng.h"
#include "narasr/tensor.h"

namespace narasr {

struct ArDecoderConfig {
  int d_m = 256;
  int layers = 4;
  int heads = 8;
  int d_ff = 2048;
  int vocab_size = 0;
  double dropout = 0.1;

  void Validate() const;  // throws ConfigError
};

// Post-norm layer: causal self-attention, cross-attention to h^a, FFN.
struct ArLayerParams {
  AttentionParams self_attn, cross_attn;
  FeedForwardParams ffn;
  Tensor norm1_gain, norm1_bias, norm2_gain, norm2_bias, norm3_gain, norm3_bias;

  void Register(const std::string& prefix, ParamSet* set) const;
};

struct ArDecoderParams {
  ArDecoderConfig config;
  Tensor token_embedding;  // [V x d_m]
  std::vector<ArLayerParams> layers;
  Tensor head_w, head_b;  // [d_m x V], [V]

  static ArDecoderParams Create(const ArDecoderConfig& config, Rng& rng);
  // Names are prefixed with "ar.".
  void Register(ParamSet* set) const;
};

// Logits [n x V]; row i depends only on tokens_in[0..i] and h_a.
// valid_steps masks padded rows of h_a (-1 for none).
Tensor ArForward(const std::vector<int>& tokens_in, const Tensor& h_a,
                 const ArDecoderParams& params, bool training, Rng& rng,
                 int valid_steps = -1);

// Starts from [CLS] and appends the argmax of the last position until [SEP]
// or max_len ids. The whole prefix is recomputed at every step (no key/value
// cache). `forwards` receives the number of ArForward calls.
std::vector<int> ArGreedyDecode(const Tensor& h_a, const ArDecoderParams& params,
                                int max_len, int* forwards = nullptr);

}  // namespace narasr

#endif  // NARASR_AR_DECODER_H_
