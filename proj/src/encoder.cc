// src/encoder.cc

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

#include "narasr/encoder.h"

#include <algorithm>
#include <cmath>

#include "narasr/errors.h"
#include "narasr/ops.h"

namespace narasr {

namespace {

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("encoder config: " + what);
}

Tensor ConvFilters(int c_out, int c_in, int k, Rng& rng) {
  // He initialization for the ReLU that follows.
  return NormalInit({c_out, c_in, k, k}, std::sqrt(2.0 / (c_in * k * k)), rng);
}

int ValidOr(int valid, int total) {
  if (valid < 0) return total;
  if (valid == 0 || valid > total) {
    throw LengthError("valid length " + std::to_string(valid) +
                      " outside 1.." + std::to_string(total));
  }
  return valid;
}

void StackLayers(std::vector<TransformerLayerParams>* layers, int count,
                 const EncoderConfig& c, Rng& rng) {
  for (int i = 0; i < count; ++i) {
    layers->push_back(TransformerLayerParams::Create(
        c.d_m, c.heads, c.d_ff, NormMode::kPre, Activation::kGlu, c.dropout,
        rng));
  }
}

}  // namespace

void EncoderConfig::Validate() const {
  Require(feat_dim >= 1, "feat_dim must be positive");
  Require(d_m >= 2 && d_m % 2 == 0, "d_m must be even");
  Require(d_n >= 1, "d_n must be positive");
  Require(cnn_filters >= 1, "cnn_filters must be positive");
  Require(kernel >= 1 && kernel % 2 == 1, "kernel must be odd");
  Require(heads >= 1 && d_m % heads == 0, "d_m must be divisible by heads");
  Require(d_ff >= 1, "d_ff must be positive");
  Require(pre_layers >= 1 && post_layers >= 1, "layer counts must be >= 1");
  Require(refine_layers >= 0, "refine_layers must be >= 0");
  Require(query_count >= 2, "query_count must be >= 2");
  Require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
}

EncoderParams EncoderParams::Create(const EncoderConfig& config, Rng& rng) {
  config.Validate();
  const EncoderConfig& c = config;
  EncoderParams p;
  p.config = c;
  p.conv1_filters = ConvFilters(c.cnn_filters, 1, c.kernel, rng);
  p.conv1_bias = Tensor::Zeros({c.cnn_filters}, true);
  p.conv2_filters = ConvFilters(c.cnn_filters, c.cnn_filters, c.kernel, rng);
  p.conv2_bias = Tensor::Zeros({c.cnn_filters}, true);
  p.cnn_proj_w =
      XavierUniform(c.cnn_filters * SubsampledLength(c.feat_dim), c.d_m, rng);
  p.cnn_proj_b = Tensor::Zeros({c.d_m}, true);
  StackLayers(&p.pre, c.pre_layers, c, rng);
  StackLayers(&p.align, 1 + c.refine_layers, c, rng);
  StackLayers(&p.post, c.post_layers, c, rng);
  p.proj_w = XavierUniform(c.d_m, c.d_n, rng);
  p.proj_b = Tensor::Zeros({c.d_n}, true);
  p.query_table = SinusoidalPositions(c.query_count, c.d_m);
  return p;
}

void EncoderParams::RegisterAcoustic(ParamSet* set) const {
  set->Add("encoder.cnn.conv1.filters", conv1_filters);
  set->Add("encoder.cnn.conv1.bias", conv1_bias);
  set->Add("encoder.cnn.conv2.filters", conv2_filters);
  set->Add("encoder.cnn.conv2.bias", conv2_bias);
  set->Add("encoder.cnn.proj.W", cnn_proj_w);
  set->Add("encoder.cnn.proj.b", cnn_proj_b);
  for (size_t i = 0; i < pre.size(); ++i)
    pre[i].Register("encoder.pre." + std::to_string(i), set);
}

void EncoderParams::Register(ParamSet* set) const {
  RegisterAcoustic(set);
  for (size_t i = 0; i < align.size(); ++i)
    align[i].Register("encoder.align." + std::to_string(i), set);
  for (size_t i = 0; i < post.size(); ++i)
    post[i].Register("encoder.post." + std::to_string(i), set);
  set->Add("encoder.proj.W_p", proj_w);
  set->Add("encoder.proj.b_p", proj_b);
}

std::vector<uint8_t> TimePrefixKeep(int channels, int rows, int cols,
                                    int valid) {
  std::vector<uint8_t> keep(static_cast<size_t>(channels) * rows * cols, 0);
  for (int c = 0; c < channels; ++c)
    for (int r = 0; r < std::min(rows, valid); ++r)
      std::fill_n(keep.begin() + (static_cast<size_t>(c) * rows + r) * cols,
                  cols, 1);
  return keep;
}

Tensor SubsampleCnn(const Tensor& frames, const EncoderParams& params,
                    int valid_frames) {
  const EncoderConfig& c = params.config;
  if (frames.rank() != 2 || frames.dim(1) != c.feat_dim) {
    throw DimensionError("encoder expects [T x " + std::to_string(c.feat_dim) +
                         "] features, got " + ShapeToString(frames.shape()));
  }
  const int t = frames.dim(0);
  if (t < 1) throw DimensionError("encoder input has no frames");
  const int valid = ValidOr(valid_frames, t);
  Tensor x = Reshape(frames, {1, t, c.feat_dim});
  x = Relu(Conv2d(x, params.conv1_filters, params.conv1_bias, 2));
  // Rows past the valid region would otherwise pick up the convolution bias
  // and leak into the next layer's receptive field.
  const int t2 = x.dim(1), valid2 = (valid + 1) / 2;
  if (valid2 < t2)
    x = MaskedFill(x, TimePrefixKeep(x.dim(0), t2, x.dim(2), valid2), 0.0);
  x = Relu(Conv2d(x, params.conv2_filters, params.conv2_bias, 2));
  const int t4 = x.dim(1), valid4 = (valid2 + 1) / 2;
  if (valid4 < t4)
    x = MaskedFill(x, TimePrefixKeep(x.dim(0), t4, x.dim(2), valid4), 0.0);
  x = SwapLeadingAxes(x);  // [T4 x C x F4]
  x = Reshape(x, {t4, x.dim(1) * x.dim(2)});
  return AddBias(Matmul(x, params.cnn_proj_w), params.cnn_proj_b);
}

Tensor EncodeAcoustic(const Tensor& frames, const EncoderParams& params,
                      bool training, Rng& rng, int valid_frames) {
  Tensor x = SubsampleCnn(frames, params, valid_frames);
  const int t4 = x.dim(0);
  const int valid4 =
      valid_frames < 0 ? t4 : SubsampledLength(ValidOr(valid_frames, frames.dim(0)));
  x = Add(x, SinusoidalPositions(t4, params.config.d_m));
  AttentionMask mask;
  const AttentionMask* mask_ptr = nullptr;
  if (valid4 < t4) {
    mask = AttentionMask::KeyPrefix(t4, t4, valid4);
    mask_ptr = &mask;
  }
  for (const TransformerLayerParams& layer : params.pre)
    x = TransformerLayer(x, nullptr, layer, mask_ptr, training, rng);
  return x;
}

Tensor AlignQueries(const Tensor& h_a, const EncoderParams& params,
                    bool training, Rng& rng, int valid_steps,
                    std::vector<Tensor>* weights) {
  const int t4 = h_a.dim(0);
  if (t4 < 1) throw DimensionError("no acoustic frames to align");
  const int valid = ValidOr(valid_steps, t4);
  AttentionMask mask;
  const AttentionMask* mask_ptr = nullptr;
  if (valid < t4) {
    mask = AttentionMask::KeyPrefix(params.config.query_count, t4, valid);
    mask_ptr = &mask;
  }
  Tensor q = params.query_table;
  for (const TransformerLayerParams& layer : params.align)
    q = TransformerLayer(q, &h_a, layer, mask_ptr, training, rng, weights);
  return q;
}

Tensor FinalEmbeddings(const Tensor& h_p, const EncoderParams& params,
                       bool training, Rng& rng) {
  if (h_p.rank() != 2 || h_p.dim(0) != params.config.query_count) {
    throw DimensionError("expected " + std::to_string(params.config.query_count) +
                         " aligned rows, got " + ShapeToString(h_p.shape()));
  }
  Tensor x = h_p;
  for (const TransformerLayerParams& layer : params.post)
    x = TransformerLayer(x, nullptr, layer, nullptr, training, rng);
  return AddBias(Matmul(x, params.proj_w), params.proj_b);
}

Tensor EncoderForward(const Tensor& frames, const EncoderParams& params,
                      bool training, Rng& rng, int valid_frames) {
  Tensor h_a = EncodeAcoustic(frames, params, training, rng, valid_frames);
  const int valid4 = valid_frames < 0 ? -1 : SubsampledLength(valid_frames);
  Tensor h_p = AlignQueries(h_a, params, training, rng, valid4);
  return FinalEmbeddings(h_p, params, training, rng);
}

std::vector<Tensor> EncoderForwardBatch(const std::vector<Tensor>& frames,
                                        const EncoderParams& params,
                                        bool training, Rng& rng) {
  int longest = 0;
  for (const Tensor& f : frames) longest = std::max(longest, f.dim(0));
  const int dim = params.config.feat_dim;
  std::vector<Tensor> out;
  out.reserve(frames.size());
  for (const Tensor& f : frames) {
    if (f.rank() != 2 || f.dim(1) != dim) {
      throw DimensionError("batch member has shape " + ShapeToString(f.shape()));
    }
    std::vector<double> padded(static_cast<size_t>(longest) * dim, 0.0);
    std::copy(f.data().begin(), f.data().end(), padded.begin());
    out.push_back(EncoderForward(Tensor::FromVector({longest, dim}, std::move(padded)),
                                 params, training, rng, f.dim(0)));
  }
  return out;
}

}  // namespace narasr
