// src/features.cc

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

#include "narasr/features.h"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "narasr/errors.h"

namespace narasr {

namespace {

int NextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// FFTW planning is not thread safe, execution is. Plans are made once per size
// with FFTW_UNALIGNED so they can run on arbitrary std::vector buffers.
fftw_plan PlanFor(int n) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<double> in(n);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, plan);
  return plan;
}

// Row-major [bins x (fft_size/2 + 1)] triangle weights.
std::vector<double> MelFilterbank(int bins, int fft_size, int sample_rate) {
  const int num_fft_bins = fft_size / 2 + 1;
  const double mel_hi = HzToMel(sample_rate / 2.0);
  const double delta = mel_hi / (bins + 1);
  std::vector<double> weights(static_cast<size_t>(bins) * num_fft_bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    const double left = b * delta, center = (b + 1) * delta,
                 right = (b + 2) * delta;
    for (int k = 0; k < num_fft_bins; ++k) {
      const double mel = HzToMel(static_cast<double>(k) * sample_rate / fft_size);
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      weights[static_cast<size_t>(b) * num_fft_bins + k] = w;
    }
  }
  return weights;
}

}  // namespace

int NumFrames(long num_samples, int window_samples, int shift_samples) {
  if (num_samples < window_samples) return 0;
  return 1 + static_cast<int>((num_samples - window_samples) / shift_samples);
}

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

double MelBinCenterHz(int index, int bins, int sample_rate) {
  const double delta = HzToMel(sample_rate / 2.0) / (bins + 1);
  return MelToHz((index + 1) * delta);
}

FeatureSequence LogMelFeatures(const Waveform& wave, const FbankOptions& opts,
                               const std::string& utterance_id) {
  if (wave.sample_rate <= 0) throw InputError("sample rate must be positive");
  if (opts.bins < 1) throw InputError("need at least one mel bin");
  const int window = static_cast<int>(
      std::lround(opts.window_ms * wave.sample_rate / 1000.0));
  const int shift = static_cast<int>(
      std::lround(opts.shift_ms * wave.sample_rate / 1000.0));
  if (window < 2 || shift < 1) throw InputError("window or shift too small");
  const long n = static_cast<long>(wave.samples.size());
  const int frames = NumFrames(n, window, shift);
  if (frames < 1) {
    throw InputError("input too short: " + std::to_string(n) +
                     " samples, one window needs " + std::to_string(window));
  }
  const int fft_size = NextPowerOfTwo(window);
  const int num_fft_bins = fft_size / 2 + 1;
  const std::vector<double> fbank =
      MelFilterbank(opts.bins, fft_size, wave.sample_rate);
  std::vector<double> hann(window);
  for (int i = 0; i < window; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (window - 1));

  fftw_plan plan = PlanFor(fft_size);
  std::vector<double> buf(fft_size, 0.0);
  std::vector<fftw_complex> spec(num_fft_bins);
  std::vector<double> mag(num_fft_bins);
  std::vector<double> out(static_cast<size_t>(frames) * opts.bins);
  for (int t = 0; t < frames; ++t) {
    const double* src = wave.samples.data() + static_cast<size_t>(t) * shift;
    for (int i = 0; i < window; ++i) buf[i] = src[i] * hann[i];
    fftw_execute_dft_r2c(plan, buf.data(), spec.data());
    for (int k = 0; k < num_fft_bins; ++k)
      mag[k] = std::hypot(spec[k][0], spec[k][1]);
    for (int b = 0; b < opts.bins; ++b) {
      const double* w = fbank.data() + static_cast<size_t>(b) * num_fft_bins;
      double energy = 0.0;
      for (int k = 0; k < num_fft_bins; ++k) energy += w[k] * mag[k];
      out[static_cast<size_t>(t) * opts.bins + b] =
          std::log(std::max(energy, kLogFloor));
    }
  }
  FeatureSequence seq;
  seq.frames = Tensor::FromVector({frames, opts.bins}, std::move(out));
  seq.frame_shift_ms = opts.shift_ms;
  seq.utterance_id = utterance_id;
  return seq;
}

FeatureSequence SpecAugment(const FeatureSequence& features,
                            const SpecAugmentPolicy& policy, Rng& rng,
                            std::vector<MaskBand>* applied) {
  const int t_len = features.num_frames(), f_len = features.dim();
  if (policy.freq_masks < 0 || policy.time_masks < 0 ||
      policy.freq_mask_width_max < 0 || policy.time_mask_width_max < 0) {
    throw PolicyError("SpecAugment policy values must be non-negative");
  }
  if (policy.freq_masks > 0 && policy.freq_mask_width_max > f_len) {
    throw PolicyError("frequency mask width " +
                      std::to_string(policy.freq_mask_width_max) +
                      " exceeds " + std::to_string(f_len) + " bins");
  }
  if (policy.time_masks > 0 && policy.time_mask_width_max > t_len) {
    throw PolicyError("time mask width " +
                      std::to_string(policy.time_mask_width_max) +
                      " exceeds " + std::to_string(t_len) + " frames");
  }
  std::vector<double> data(features.frames.data().begin(),
                           features.frames.data().end());
  for (int m = 0; m < policy.freq_masks; ++m) {
    const int width = rng.UniformInt(0, policy.freq_mask_width_max);
    const int start = rng.UniformInt(0, f_len - width);
    for (int t = 0; t < t_len; ++t)
      for (int f = start; f < start + width; ++f)
        data[static_cast<size_t>(t) * f_len + f] = 0.0;
    if (applied != nullptr) applied->push_back({false, start, width});
  }
  for (int m = 0; m < policy.time_masks; ++m) {
    const int width = rng.UniformInt(0, policy.time_mask_width_max);
    const int start = rng.UniformInt(0, t_len - width);
    for (int t = start; t < start + width; ++t)
      for (int f = 0; f < f_len; ++f) data[static_cast<size_t>(t) * f_len + f] = 0.0;
    if (applied != nullptr) applied->push_back({true, start, width});
  }
  FeatureSequence out = features;
  out.frames = Tensor::FromVector(features.frames.shape(), std::move(data));
  return out;
}

}  // namespace narasr
