// narasr/features.h

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

#ifndef NARASR_FEATURES_H_
#define NARASR_FEATURES_H_

#include <string>
#include <vector>

#include "narasr/rng.h"
#include "narasr/tensor.h"
#include "narasr/wav.h"

namespace narasr {

inline constexpr double kLogFloor = 1e-10;

struct FeatureSequence {
  Tensor frames;  // [T x F]
  double frame_shift_ms = 10.0;
  std::string utterance_id;

  int num_frames() const { return frames.dim(0); }
  int dim() const { return frames.dim(1); }
};

struct FbankOptions {
  int bins = 80;
  double window_ms = 25.0;
  double shift_ms = 10.0;
};

// Number of whole frames that fit in num_samples; 0 if not even one does.
int NumFrames(long num_samples, int window_samples, int shift_samples);

// HTK-style mel scale.
double HzToMel(double hz);
double MelToHz(double mel);

// Center frequency of filter `index` in a bank of `bins` triangles spread
// evenly on the mel axis between 0 Hz and the Nyquist frequency.
double MelBinCenterHz(int index, int bins, int sample_rate);

// Hann window, magnitude spectrum, triangular mel filters, natural log with a
// floor of kLogFloor. Throws InputError if the signal is shorter than one
// window.
FeatureSequence LogMelFeatures(const Waveform& wave, const FbankOptions& opts,
                               const std::string& utterance_id = "");

struct SpecAugmentPolicy {
  int freq_mask_width_max = 0;
  int freq_masks = 0;
  int time_mask_width_max = 0;
  int time_masks = 0;
};

// A masked band: [start, start + width) along the given axis.
struct MaskBand {
  bool time_axis = false;
  int start = 0;
  int width = 0;
};

// Frequency masks are drawn first, then time masks. Throws PolicyError when a
// count or width is negative or a width exceeds its axis.
FeatureSequence SpecAugment(const FeatureSequence& features,
                            const SpecAugmentPolicy& policy, Rng& rng,
                            std::vector<MaskBand>* applied = nullptr);

}  // namespace narasr

#endif  // NARASR_FEATURES_H_
