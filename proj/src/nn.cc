// src/nn.cc

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

#include "narasr/nn.h"

#include <algorithm>
#include <cmath>

#include "narasr/errors.h"
#include "narasr/ops.h"

namespace narasr {

const char* ToString(NormMode mode) {
  return mode == NormMode::kPre ? "pre" : "post";
}

const char* ToString(Activation activation) {
  return activation == Activation::kGlu ? "glu" : "relu";
}

AttentionMask AttentionMask::KeyPrefix(int rows, int cols, int valid_keys) {
  AttentionMask mask;
  mask.rows = rows;
  mask.cols = cols;
  mask.keep.assign(static_cast<size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < std::min(cols, valid_keys); ++c)
      mask.keep[static_cast<size_t>(r) * cols + c] = 1;
  return mask;
}

AttentionMask AttentionMask::Causal(int n) {
  AttentionMask mask;
  mask.rows = n;
  mask.cols = n;
  mask.keep.assign(static_cast<size_t>(n) * n, 0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c <= r; ++c) mask.keep[static_cast<size_t>(r) * n + c] = 1;
  return mask;
}

AttentionParams AttentionParams::Create(int d_model, int heads, Rng& rng) {
  if (heads < 1 || d_model % heads != 0) {
    throw DimensionError("d_model " + std::to_string(d_model) +
                         " is not divisible by " + std::to_string(heads) +
                         " heads");
  }
  AttentionParams p;
  p.w_q = XavierUniform(d_model, d_model, rng);
  p.w_k = XavierUniform(d_model, d_model, rng);
  p.w_v = XavierUniform(d_model, d_model, rng);
  p.w_o = XavierUniform(d_model, d_model, rng);
  p.heads = heads;
  return p;
}

void AttentionParams::Register(const std::string& prefix, ParamSet* set) const {
  set->Add(prefix + ".W_q", w_q);
  set->Add(prefix + ".W_k", w_k);
  set->Add(prefix + ".W_v", w_v);
  set->Add(prefix + ".W_o", w_o);
}

FeedForwardParams FeedForwardParams::Create(int d_model, int d_ff,
                                            Activation activation, Rng& rng) {
  FeedForwardParams p;
  const int expanded = activation == Activation::kGlu ? 2 * d_ff : d_ff;
  p.w_1 = XavierUniform(d_model, expanded, rng);
  p.b_1 = Tensor::Zeros({expanded}, true);
  p.w_2 = XavierUniform(d_ff, d_model, rng);
  p.b_2 = Tensor::Zeros({d_model}, true);
  p.activation = activation;
  return p;
}

void FeedForwardParams::Register(const std::string& prefix,
                                 ParamSet* set) const {
  set->Add(prefix + ".W_1", w_1);
  set->Add(prefix + ".b_1", b_1);
  set->Add(prefix + ".W_2", w_2);
  set->Add(prefix + ".b_2", b_2);
}

TransformerLayerParams TransformerLayerParams::Create(
    int d_model, int heads, int d_ff, NormMode norm_mode,
    Activation activation, double dropout_rate, Rng& rng) {
  TransformerLayerParams p;
  p.attn = AttentionParams::Create(d_model, heads, rng);
  p.ffn = FeedForwardParams::Create(d_model, d_ff, activation, rng);
  p.norm1_gain = Tensor::Full({d_model}, 1.0, true);
  p.norm1_bias = Tensor::Zeros({d_model}, true);
  p.norm2_gain = Tensor::Full({d_model}, 1.0, true);
  p.norm2_bias = Tensor::Zeros({d_model}, true);
  p.norm_mode = norm_mode;
  p.dropout_rate = dropout_rate;
  return p;
}

void TransformerLayerParams::Register(const std::string& prefix,
                                      ParamSet* set) const {
  attn.Register(prefix + ".attn", set);
  ffn.Register(prefix + ".ffn", set);
  set->Add(prefix + ".norm1.gain", norm1_gain);
  set->Add(prefix + ".norm1.bias", norm1_bias);
  set->Add(prefix + ".norm2.gain", norm2_gain);
  set->Add(prefix + ".norm2.bias", norm2_bias);
}

Tensor SinusoidalPositions(int length, int d_model) {
  if (d_model <= 0 || d_model % 2 != 0) {
    throw DimensionError("sinusoidal positions need an even d_model, got " +
                         std::to_string(d_model));
  }
  if (length < 0) throw DimensionError("negative position count");
  std::vector<double> table(static_cast<size_t>(length) * d_model);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model / 2; ++i) {
      const double angle =
          pos / std::pow(10000.0, (2.0 * i) / static_cast<double>(d_model));
      table[static_cast<size_t>(pos) * d_model + 2 * i] = std::sin(angle);
      table[static_cast<size_t>(pos) * d_model + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor::FromVector({length, d_model}, std::move(table));
}

Tensor MultiHeadAttention(const Tensor& q_in, const Tensor& kv_in,
                          const AttentionParams& params,
                          const AttentionMask* mask,
                          std::vector<Tensor>* weights) {
  const int d = params.d_model();
  if (q_in.rank() != 2 || kv_in.rank() != 2 || q_in.dim(1) != d ||
      kv_in.dim(1) != d) {
    throw DimensionError("attention: inputs " + ShapeToString(q_in.shape()) +
                         " / " + ShapeToString(kv_in.shape()) +
                         " do not match d_model " + std::to_string(d));
  }
  const int lq = q_in.dim(0), lkv = kv_in.dim(0);
  if (lkv == 0) throw DimensionError("attention: no keys");
  if (mask != nullptr) {
    if (mask->rows != lq || mask->cols != lkv) {
      throw DimensionError("attention: mask is " + std::to_string(mask->rows) +
                           "x" + std::to_string(mask->cols) + ", scores are " +
                           std::to_string(lq) + "x" + std::to_string(lkv));
    }
    for (int r = 0; r < lq; ++r) {
      bool any = false;
      for (int c = 0; c < lkv && !any; ++c) any = mask->allowed(r, c);
      if (!any) {
        throw ContractError("attention: mask row " + std::to_string(r) +
                            " hides every key");
      }
    }
  }
  const int heads = params.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = Matmul(q_in, params.w_q);
  Tensor k_t = Transpose(Matmul(kv_in, params.w_k));  // [d x L_kv]
  Tensor v = Matmul(kv_in, params.w_v);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Tensor qh = heads == 1 ? q : SliceCols(q, h * dh, (h + 1) * dh);
    Tensor kh = heads == 1 ? k_t : SliceRows(k_t, h * dh, (h + 1) * dh);
    Tensor vh = heads == 1 ? v : SliceCols(v, h * dh, (h + 1) * dh);
    Tensor scores = Scale(Matmul(qh, kh), scale);
    if (mask != nullptr) scores = MaskedFill(scores, mask->keep, kMaskedScore);
    Tensor attn = Softmax(scores, 1);
    if (weights != nullptr) weights->push_back(attn);
    head_outputs.push_back(Matmul(attn, vh));
  }
  Tensor merged = heads == 1 ? head_outputs[0] : ConcatCols(head_outputs);
  return Matmul(merged, params.w_o);
}

Tensor FeedForward(const Tensor& x, const FeedForwardParams& params) {
  Tensor hidden = AddBias(Matmul(x, params.w_1), params.b_1);
  hidden = params.activation == Activation::kGlu ? Glu(hidden) : Relu(hidden);
  return AddBias(Matmul(hidden, params.w_2), params.b_2);
}

Tensor TransformerLayer(const Tensor& q_in, const Tensor* kv_in,
                        const TransformerLayerParams& params,
                        const AttentionMask* mask, bool training, Rng& rng,
                        std::vector<Tensor>* weights) {
  const double rate = params.dropout_rate;
  if (params.norm_mode == NormMode::kPre) {
    Tensor q_norm = LayerNorm(q_in, params.norm1_gain, params.norm1_bias,
                              kLayerNormEps);
    Tensor kv_norm = kv_in == nullptr
                         ? q_norm
                         : LayerNorm(*kv_in, params.norm1_gain,
                                     params.norm1_bias, kLayerNormEps);
    Tensor attn = MultiHeadAttention(q_norm, kv_norm, params.attn, mask, weights);
    Tensor y = Add(q_in, Dropout(attn, rate, training, rng));
    Tensor ffn = FeedForward(
        LayerNorm(y, params.norm2_gain, params.norm2_bias, kLayerNormEps),
        params.ffn);
    return Add(y, Dropout(ffn, rate, training, rng));
  }
  const Tensor& kv = kv_in == nullptr ? q_in : *kv_in;
  Tensor attn = MultiHeadAttention(q_in, kv, params.attn, mask, weights);
  Tensor y = LayerNorm(Add(q_in, Dropout(attn, rate, training, rng)),
                       params.norm1_gain, params.norm1_bias, kLayerNormEps);
  Tensor ffn = FeedForward(y, params.ffn);
  return LayerNorm(Add(y, Dropout(ffn, rate, training, rng)), params.norm2_gain,
                   params.norm2_bias, kLayerNormEps);
}

}  // namespace narasr
