// src/decoder.cc

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

#include "narasr/decoder.h"

#include <string>

#include "narasr/errors.h"
#include "narasr/ops.h"

namespace narasr {

namespace {

constexpr double kEmbeddingStd = 0.02;

}  // namespace

void DecoderConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("decoder config: ") + what);
  };
  require(d_n >= 1, "d_n must be positive");
  require(heads >= 1 && d_n % heads == 0, "d_n must be divisible by heads");
  require(layers >= 1, "layers must be >= 1");
  require(d_ff >= 1, "d_ff must be positive");
  require(max_positions >= 1, "max_positions must be positive");
  require(vocab_size > kNumSpecials, "vocab_size must exceed the special tokens");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
}

DecoderParams DecoderParams::Create(const DecoderConfig& config, Rng& rng) {
  config.Validate();
  const DecoderConfig& c = config;
  DecoderParams p;
  p.config = c;
  p.token_embedding = NormalInit({c.vocab_size, c.d_n}, kEmbeddingStd, rng);
  p.position_embedding = NormalInit({c.max_positions, c.d_n}, kEmbeddingStd, rng);
  p.segment_embedding = NormalInit({2, c.d_n}, kEmbeddingStd, rng);
  p.emb_norm_gain = Tensor::Full({c.d_n}, 1.0, true);
  p.emb_norm_bias = Tensor::Zeros({c.d_n}, true);
  for (int i = 0; i < c.layers; ++i) {
    p.layers.push_back(TransformerLayerParams::Create(
        c.d_n, c.heads, c.d_ff, NormMode::kPost, Activation::kRelu, c.dropout,
        rng));
  }
  p.head_w = XavierUniform(c.d_n, c.vocab_size, rng);
  p.head_b = Tensor::Zeros({c.vocab_size}, true);
  return p;
}

void DecoderParams::Register(ParamSet* set) const {
  set->Add("decoder.embedding.token", token_embedding);
  set->Add("decoder.embedding.position", position_embedding);
  set->Add("decoder.embedding.segment", segment_embedding);
  set->Add("decoder.embedding.norm.gain", emb_norm_gain);
  set->Add("decoder.embedding.norm.bias", emb_norm_bias);
  for (size_t i = 0; i < layers.size(); ++i)
    layers[i].Register("decoder.layer." + std::to_string(i), set);
  set->Add("decoder.head.W_h", head_w);
  set->Add("decoder.head.b_h", head_b);
}

Tensor DecoderForward(const Tensor& inputs, const DecoderParams& params,
                      bool training, Rng& rng) {
  const DecoderConfig& c = params.config;
  if (inputs.rank() != 2 || inputs.dim(1) != c.d_n) {
    throw DimensionError("decoder expects [L x " + std::to_string(c.d_n) +
                         "] inputs, got " + ShapeToString(inputs.shape()));
  }
  const int len = inputs.dim(0);
  if (len > c.max_positions) {
    throw LengthError("decoder input of length " + std::to_string(len) +
                      " exceeds max_positions " +
                      std::to_string(c.max_positions));
  }
  Tensor x = Add(inputs, SliceRows(params.position_embedding, 0, len));
  x = AddBias(x, Reshape(SliceRows(params.segment_embedding, 0, 1), {c.d_n}));
  x = LayerNorm(x, params.emb_norm_gain, params.emb_norm_bias, kLayerNormEps);
  x = Dropout(x, c.dropout, training, rng);
  for (const TransformerLayerParams& layer : params.layers)
    x = TransformerLayer(x, nullptr, layer, nullptr, training, rng);
  return AddBias(Matmul(x, params.head_w), params.head_b);
}

Tensor DecoderForwardTokens(const std::vector<int>& ids,
                            const DecoderParams& params, bool training,
                            Rng& rng) {
  return DecoderForward(EmbeddingLookup(params.token_embedding, ids), params,
                        training, rng);
}

std::vector<int> ClassifyPositions(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("logits must be rank 2");
  const int rows = logits.dim(0), cols = logits.dim(1);
  std::vector<int> out(rows, 0);
  const auto data = logits.data();
  for (int r = 0; r < rows; ++r) {
    const double* row = data.data() + static_cast<size_t>(r) * cols;
    int best = 0;
    for (int c = 1; c < cols; ++c)
      if (row[c] > row[best]) best = c;
    out[r] = best;
  }
  return out;
}

MlmSample MlmCorrupt(const TokenSequence& tokens, double mask_rate,
                     int vocab_size, Rng& rng) {
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) {
    throw ContractError("mask rate must be in (0, 1), got " +
                        std::to_string(mask_rate));
  }
  if (vocab_size <= kNumSpecials) {
    throw ContractError("vocabulary has no ordinary tokens");
  }
  MlmSample s;
  s.original = tokens.ids;
  s.corrupted = tokens.ids;
  for (size_t i = 0; i < tokens.ids.size(); ++i) {
    if (Vocabulary::IsSpecial(tokens.ids[i])) continue;
    if (rng.Uniform() >= mask_rate) continue;
    const double u = rng.Uniform();
    MlmAction action;
    if (u < 0.8) {
      action = MlmAction::kMask;
      s.corrupted[i] = kMaskId;
    } else if (u < 0.9) {
      action = MlmAction::kRandom;
      s.corrupted[i] = rng.UniformInt(kNumSpecials, vocab_size - 1);
    } else {
      action = MlmAction::kKeep;
    }
    s.positions.push_back(static_cast<int>(i));
    s.actions.push_back(action);
  }
  return s;
}

Tensor MlmLoss(const MlmSample& sample, const DecoderParams& params,
               bool training, Rng& rng) {
  if (sample.positions.empty()) {
    throw ContractError("MLM sample has no selected positions");
  }
  std::vector<uint8_t> active(sample.original.size(), 0);
  for (int pos : sample.positions) active[pos] = 1;
  Tensor logits = DecoderForwardTokens(sample.corrupted, params, training, rng);
  return LabelSmoothedNll(logits, sample.original, 0.0, active);
}

}  // namespace narasr
