// narasr/encoder.h

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

#ifndef NARASR_ENCODER_H_
#define NARASR_ENCODER_H_

#include <string>
#include <vector>

#include "narasr/nn.h"
#include "narasr/params.h"
#include "narasr/rng.h"
#include "narasr/tensor.h"

namespace narasr {

struct EncoderConfig {
  int feat_dim = 80;
  int d_m = 256;
  int d_n = 768;
  int cnn_filters = 32;
  int kernel = 3;
  int pre_layers = 6;
  int refine_layers = 3;  // in addition to the initial alignment layer
  int post_layers = 6;
  int heads = 8;
  int d_ff = 2048;
  int query_count = 60;  // L'
  double dropout = 0.1;

  // Throws ConfigError describing the first violated constraint.
  void Validate() const;
};

// Time steps left after the two stride-2 convolutions.
inline int SubsampledLength(int t) { return ((t + 1) / 2 + 1) / 2; }

struct EncoderParams {
  EncoderConfig config;
  Tensor conv1_filters, conv1_bias;  // [C x 1 x k x k], [C]
  Tensor conv2_filters, conv2_bias;  // [C x C x k x k], [C]
  Tensor cnn_proj_w, cnn_proj_b;     // [C * F4 x d_m], [d_m]
  std::vector<TransformerLayerParams> pre;
  std::vector<TransformerLayerParams> align;  // 1 + refine_layers
  std::vector<TransformerLayerParams> post;
  Tensor proj_w, proj_b;  // [d_m x d_n], [d_n]
  Tensor query_table;     // frozen sinusoidal [L' x d_m], not a parameter

  static EncoderParams Create(const EncoderConfig& config, Rng& rng);
  // Names are prefixed with "encoder.".
  void Register(ParamSet* set) const;
  // Only the convolution front end and the pre-alignment stack; this is the
  // part shared with the autoregressive baseline.
  void RegisterAcoustic(ParamSet* set) const;
};

// The stages below take the number of valid input frames so that a
// zero-padded utterance gives the same result as the unpadded one. Pass -1
// when the input carries no padding.

// [T x F] -> [T4 x d_m].
Tensor SubsampleCnn(const Tensor& frames, const EncoderParams& params,
                    int valid_frames = -1);

// h^a: CNN output plus positions through the pre-norm stack.
Tensor EncodeAcoustic(const Tensor& frames, const EncoderParams& params,
                      bool training, Rng& rng, int valid_frames = -1);

// h^p [L' x d_m]. valid_steps counts unpadded rows of h_a (-1 for all).
// Attention weights of every layer and head are appended to `weights` when
// given.
Tensor AlignQueries(const Tensor& h_a, const EncoderParams& params,
                    bool training, Rng& rng, int valid_steps = -1,
                    std::vector<Tensor>* weights = nullptr);

// h^f [L' x d_n].
Tensor FinalEmbeddings(const Tensor& h_p, const EncoderParams& params,
                       bool training, Rng& rng);

Tensor EncoderForward(const Tensor& frames, const EncoderParams& params,
                      bool training, Rng& rng, int valid_frames = -1);

// Zero-pads every utterance to the longest one and runs each through the
// masked forward. Results are in input order.
std::vector<Tensor> EncoderForwardBatch(const std::vector<Tensor>& frames,
                                        const EncoderParams& params,
                                        bool training, Rng& rng);

// Keep mask for rows [valid, rows) of a [C x rows x cols] tensor.
std::vector<uint8_t> TimePrefixKeep(int channels, int rows, int cols, int valid);

}  // namespace narasr

#endif  // NARASR_ENCODER_H_
