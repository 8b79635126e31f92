// src/ar_decoder.cc

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

#include "narasr/ar_decoder.h"

#include <cmath>
#include <string>

#include "narasr/errors.h"
#include "narasr/ops.h"
#include "narasr/vocab.h"

namespace narasr {

void ArDecoderConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("ar config: ") + what);
  };
  require(d_m >= 2 && d_m % 2 == 0, "d_m must be even");
  require(heads >= 1 && d_m % heads == 0, "d_m must be divisible by heads");
  require(layers >= 1, "layers must be >= 1");
  require(d_ff >= 1, "d_ff must be positive");
  require(vocab_size > kNumSpecials, "vocab_size must exceed the special tokens");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
}

void ArLayerParams::Register(const std::string& prefix, ParamSet* set) const {
  self_attn.Register(prefix + ".self_attn", set);
  cross_attn.Register(prefix + ".cross_attn", set);
  ffn.Register(prefix + ".ffn", set);
  set->Add(prefix + ".norm1.gain", norm1_gain);
  set->Add(prefix + ".norm1.bias", norm1_bias);
  set->Add(prefix + ".norm2.gain", norm2_gain);
  set->Add(prefix + ".norm2.bias", norm2_bias);
  set->Add(prefix + ".norm3.gain", norm3_gain);
  set->Add(prefix + ".norm3.bias", norm3_bias);
}

ArDecoderParams ArDecoderParams::Create(const ArDecoderConfig& config,
                                        Rng& rng) {
  config.Validate();
  const ArDecoderConfig& c = config;
  ArDecoderParams p;
  p.config = c;
  p.token_embedding = NormalInit({c.vocab_size, c.d_m}, 1.0 / std::sqrt(c.d_m), rng);
  for (int i = 0; i < c.layers; ++i) {
    ArLayerParams layer;
    layer.self_attn = AttentionParams::Create(c.d_m, c.heads, rng);
    layer.cross_attn = AttentionParams::Create(c.d_m, c.heads, rng);
    layer.ffn = FeedForwardParams::Create(c.d_m, c.d_ff, Activation::kRelu, rng);
    for (Tensor* g : {&layer.norm1_gain, &layer.norm2_gain, &layer.norm3_gain})
      *g = Tensor::Full({c.d_m}, 1.0, true);
    for (Tensor* b : {&layer.norm1_bias, &layer.norm2_bias, &layer.norm3_bias})
      *b = Tensor::Zeros({c.d_m}, true);
    p.layers.push_back(std::move(layer));
  }
  p.head_w = XavierUniform(c.d_m, c.vocab_size, rng);
  p.head_b = Tensor::Zeros({c.vocab_size}, true);
  return p;
}

void ArDecoderParams::Register(ParamSet* set) const {
  set->Add("ar.embedding.token", token_embedding);
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].Register("ar.layer." + std::to_string(i), set);
  set->Add("ar.head.W", head_w);
  set->Add("ar.head.b", head_b);
}

Tensor ArForward(const std::vector<int>& tokens_in, const Tensor& h_a,
                 const ArDecoderParams& params, bool training, Rng& rng,
                 int valid_steps) {
  const ArDecoderConfig& c = params.config;
  const int n = static_cast<int>(tokens_in.size());
  if (n < 1) throw LengthError("autoregressive input is empty");
  if (h_a.rank() != 2 || h_a.dim(1) != c.d_m || h_a.dim(0) < 1) {
    throw DimensionError("acoustic input has shape " + ShapeToString(h_a.shape()));
  }
  const int t4 = h_a.dim(0);
  const double rate = c.dropout;
  Tensor x = Scale(EmbeddingLookup(params.token_embedding, tokens_in),
                   std::sqrt(static_cast<double>(c.d_m)));
  x = Dropout(Add(x, SinusoidalPositions(n, c.d_m)), rate, training, rng);
  const AttentionMask causal = AttentionMask::Causal(n);
  AttentionMask keys;
  const AttentionMask* keys_ptr = nullptr;
  if (valid_steps >= 0 && valid_steps < t4) {
    keys = AttentionMask::KeyPrefix(n, t4, valid_steps);
    keys_ptr = &keys;
  }
  for (const ArLayerParams& layer : params.layers) {
    Tensor a = MultiHeadAttention(x, x, layer.self_attn, &causal);
    x = LayerNorm(Add(x, Dropout(a, rate, training, rng)), layer.norm1_gain,
                  layer.norm1_bias, kLayerNormEps);
    Tensor cross = MultiHeadAttention(x, h_a, layer.cross_attn, keys_ptr);
    x = LayerNorm(Add(x, Dropout(cross, rate, training, rng)), layer.norm2_gain,
                  layer.norm2_bias, kLayerNormEps);
    Tensor f = FeedForward(x, layer.ffn);
    x = LayerNorm(Add(x, Dropout(f, rate, training, rng)), layer.norm3_gain,
                  layer.norm3_bias, kLayerNormEps);
  }
  return AddBias(Matmul(x, params.head_w), params.head_b);
}

std::vector<int> ArGreedyDecode(const Tensor& h_a, const ArDecoderParams& params,
                                int max_len, int* forwards) {
  std::vector<int> ids{kClsId};
  int calls = 0;
  Rng unused(0);  // dropout is off at inference
  while (static_cast<int>(ids.size()) < max_len) {
    Tensor logits = ArForward(ids, h_a, params, false, unused);
    ++calls;
    const int v = logits.dim(1);
    const auto row = logits.data().subspan(static_cast<size_t>(logits.dim(0) - 1) * v, v);
    int best = 0;
    for (int j = 1; j < v; ++j)
      if (row[j] > row[best]) best = j;
    ids.push_back(best);
    if (best == kSepId) break;
  }
  if (forwards != nullptr) *forwards = calls;
  return ids;
}

}  // namespace narasr
