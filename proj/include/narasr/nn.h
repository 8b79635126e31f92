// narasr/nn.h

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

#ifndef NARASR_NN_H_
#define NARASR_NN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "narasr/params.h"
#include "narasr/rng.h"
#include "narasr/tensor.h"

namespace narasr {

inline constexpr double kLayerNormEps = 1e-5;
// Pre-softmax score for disallowed attention cells.
inline constexpr double kMaskedScore = -1e9;

enum class NormMode { kPre, kPost };
enum class Activation { kGlu, kRelu };

const char* ToString(NormMode mode);
const char* ToString(Activation activation);

// Boolean [rows x cols] matrix; a non-zero cell means the query row may
// attend to that key column.
struct AttentionMask {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> keep;

  // Every row may see keys [0, valid_keys).
  static AttentionMask KeyPrefix(int rows, int cols, int valid_keys);
  // Row i sees keys 0..i.
  static AttentionMask Causal(int n);

  bool allowed(int r, int c) const {
    return keep[static_cast<size_t>(r) * cols + c] != 0;
  }
};

struct AttentionParams {
  Tensor w_q, w_k, w_v, w_o;  // [d_model x d_model]
  int heads = 1;

  static AttentionParams Create(int d_model, int heads, Rng& rng);
  int d_model() const { return w_q.dim(0); }
  void Register(const std::string& prefix, ParamSet* set) const;
};

struct FeedForwardParams {
  // w_1 is [d_model x 2*d_ff] for GLU, [d_model x d_ff] for ReLU.
  Tensor w_1, b_1, w_2, b_2;
  Activation activation = Activation::kRelu;

  static FeedForwardParams Create(int d_model, int d_ff, Activation activation,
                                  Rng& rng);
  void Register(const std::string& prefix, ParamSet* set) const;
};

struct TransformerLayerParams {
  AttentionParams attn;
  FeedForwardParams ffn;
  Tensor norm1_gain, norm1_bias, norm2_gain, norm2_bias;
  NormMode norm_mode = NormMode::kPre;
  double dropout_rate = 0.0;

  static TransformerLayerParams Create(int d_model, int heads, int d_ff,
                                       NormMode norm_mode,
                                       Activation activation,
                                       double dropout_rate, Rng& rng);
  void Register(const std::string& prefix, ParamSet* set) const;
};

// PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(same).
Tensor SinusoidalPositions(int length, int d_model);

// Scaled dot-product attention per head, heads concatenated, then W_o.
// When `weights` is non-null the per-head [L_q x L_kv] attention weight
// tensors are appended to it.
Tensor MultiHeadAttention(const Tensor& q_in, const Tensor& kv_in,
                          const AttentionParams& params,
                          const AttentionMask* mask,
                          std::vector<Tensor>* weights = nullptr);

Tensor FeedForward(const Tensor& x, const FeedForwardParams& params);

// Pre mode:  y = x + Drop(Attn(LN1(x), LN1(kv)));  out = y + Drop(FFN(LN2(y)))
// Post mode: y = LN1(x + Drop(Attn(x, kv)));       out = LN2(y + Drop(FFN(y)))
// kv_in == nullptr means self-attention.
Tensor TransformerLayer(const Tensor& q_in, const Tensor* kv_in,
                        const TransformerLayerParams& params,
                        const AttentionMask* mask, bool training, Rng& rng,
                        std::vector<Tensor>* weights = nullptr);

}  // namespace narasr

#endif  // NARASR_NN_H_
