// tests/frontend_test.cc

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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "narasr/errors.h"
#include "narasr/features.h"
#include "narasr/wav.h"

namespace narasr {
namespace {

Waveform Tone(double hz, double seconds, double amp = 0.5, int sr = 16000) {
  Waveform w;
  w.sample_rate = sr;
  const int n = static_cast<int>(seconds * sr);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2 * M_PI * hz * i / sr);
  return w;
}

TEST(WavTest, RoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "narasr_wav_test.wav").string();
  Waveform w = Tone(440.0, 0.1);
  WriteWav(path, w);
  Waveform r = ReadWav(path);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  EXPECT_EQ(r.sample_rate, 16000);
  for (size_t i = 0; i < w.samples.size(); ++i)
    EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 16000);
  std::remove(path.c_str());
}

TEST(WavTest, RejectsGarbage) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "narasr_bad.wav").string();
  FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("not a wav file at all", f);
  std::fclose(f);
  EXPECT_THROW(ReadWav(path), InputError);
  EXPECT_THROW(ReadWav(path + ".missing"), InputError);
  std::remove(path.c_str());
}

TEST(LogMelTest, OneSecondFrameCount) {
  FeatureSequence f = LogMelFeatures(Tone(300, 1.0), FbankOptions{}, "u");
  EXPECT_EQ(f.num_frames(), 98);
  EXPECT_EQ(f.dim(), 80);
  EXPECT_EQ(f.utterance_id, "u");
}

TEST(LogMelTest, FrameCountFormulaExhaustive) {
  for (long n = 400; n <= 20000; ++n)
    ASSERT_EQ(NumFrames(n, 400, 160), 1 + (n - 400) / 160) << n;
  EXPECT_EQ(NumFrames(399, 400, 160), 0);
  // Spot check the real extractor on a few awkward lengths.
  for (long n : {400L, 401L, 559L, 560L, 561L, 12345L}) {
    Waveform w;
    w.samples.assign(n, 0.01);
    EXPECT_EQ(LogMelFeatures(w, FbankOptions{}).num_frames(), 1 + (n - 400) / 160);
  }
}

TEST(LogMelTest, SilenceIsLogFloor) {
  Waveform w;
  w.samples.assign(4000, 0.0);
  FeatureSequence f = LogMelFeatures(w, FbankOptions{});
  for (double v : f.frames.data()) EXPECT_EQ(v, std::log(1e-10));
}

TEST(LogMelTest, TooShortIsInputError) {
  Waveform w;
  w.samples.assign(399, 0.1);
  EXPECT_THROW(LogMelFeatures(w, FbankOptions{}), InputError);
}

TEST(LogMelTest, ToneArgmaxIsNearestCenter) {
  // Centers recomputed with the base-10 mel formula, independent of the
  // library's natural-log form.
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  for (double freq : {1000.0, 440.0, 2500.0}) {
    const double step = mel(8000.0) / 81.0;
    int nearest = 0;
    for (int b = 1; b < 80; ++b) {
      if (std::abs(hz((b + 1) * step) - freq) <
          std::abs(hz((nearest + 1) * step) - freq))
        nearest = b;
    }
    EXPECT_NEAR(MelBinCenterHz(nearest, 80, 16000), hz((nearest + 1) * step),
                1e-6);
    FeatureSequence f = LogMelFeatures(Tone(freq, 0.5), FbankOptions{});
    const int t = f.num_frames() / 2;
    int best = 0;
    for (int b = 1; b < 80; ++b)
      if (f.frames.at(t, b) > f.frames.at(t, best)) best = b;
    EXPECT_EQ(best, nearest) << freq << " Hz";
  }
}

TEST(LogMelTest, FiniteForExtremeInputs) {
  Rng rng(3);
  Waveform w;
  w.samples.resize(3000);
  for (double& s : w.samples) s = rng.Uniform() < 0.5 ? 1e6 * rng.Normal() : 1e-300;
  for (double v : LogMelFeatures(w, FbankOptions{}).frames.data())
    EXPECT_TRUE(std::isfinite(v));
}

FeatureSequence RandomFeatures(int t, int f, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(static_cast<size_t>(t) * f);
  for (double& x : v) x = rng.Uniform(1.0, 2.0);  // never zero
  FeatureSequence s;
  s.frames = Tensor::FromVector({t, f}, std::move(v));
  return s;
}

TEST(SpecAugmentTest, ZeroPolicyIsNoop) {
  FeatureSequence f = RandomFeatures(20, 10, 1);
  Rng rng(5);
  FeatureSequence g = SpecAugment(f, SpecAugmentPolicy{}, rng);
  for (size_t i = 0; i < f.frames.size(); ++i) EXPECT_EQ(g.frames.at(i), f.frames.at(i));
}

TEST(SpecAugmentTest, FullWidthFreqMask) {
  FeatureSequence f = RandomFeatures(12, 16, 2);
  SpecAugmentPolicy policy{4, 1, 0, 0};
  // Search for a seed whose width draw hits the maximum.
  for (uint64_t seed = 0;; ++seed) {
    Rng rng(seed);
    std::vector<MaskBand> bands;
    FeatureSequence g = SpecAugment(f, policy, rng, &bands);
    ASSERT_EQ(bands.size(), 1u);
    if (bands[0].width != 4) continue;
    for (int t = 0; t < 12; ++t)
      for (int b = 0; b < 16; ++b) {
        const bool inside = b >= bands[0].start && b < bands[0].start + 4;
        if (inside) {
          EXPECT_EQ(g.frames.at(t, b), 0.0);
        } else {
          EXPECT_EQ(g.frames.at(t, b), f.frames.at(t, b));
        }
      }
    break;
  }
}

TEST(SpecAugmentTest, DeterministicPerSeed) {
  FeatureSequence f = RandomFeatures(30, 8, 3);
  SpecAugmentPolicy policy{3, 2, 5, 2};
  Rng a(9), b(9);
  FeatureSequence x = SpecAugment(f, policy, a), y = SpecAugment(f, policy, b);
  for (size_t i = 0; i < x.frames.size(); ++i) EXPECT_EQ(x.frames.at(i), y.frames.at(i));
}

TEST(SpecAugmentTest, ChangesOnlyMaskedCells) {
  SpecAugmentPolicy policy{3, 2, 6, 2};
  for (uint64_t seed = 0; seed < 200; ++seed) {
    FeatureSequence f = RandomFeatures(25, 9, seed);
    Rng rng(seed * 7 + 1);
    std::vector<MaskBand> bands;
    FeatureSequence g = SpecAugment(f, policy, rng, &bands);
    int changed = 0;
    for (int t = 0; t < 25; ++t)
      for (int b = 0; b < 9; ++b) {
        bool inside = false;
        for (const MaskBand& m : bands) {
          const int pos = m.time_axis ? t : b;
          inside = inside || (pos >= m.start && pos < m.start + m.width);
        }
        if (g.frames.at(t, b) != f.frames.at(t, b)) {
          ++changed;
          EXPECT_TRUE(inside);
          EXPECT_EQ(g.frames.at(t, b), 0.0);
        } else {
          EXPECT_FALSE(inside);
        }
      }
    EXPECT_LE(changed, 2 * 3 * 25 + 2 * 6 * 9);
    for (const MaskBand& m : bands) {
      EXPECT_GE(m.width, 0);
      EXPECT_LE(m.width, m.time_axis ? 6 : 3);
    }
  }
}

TEST(SpecAugmentTest, OversizedWidthIsPolicyError) {
  FeatureSequence f = RandomFeatures(5, 4, 1);
  Rng rng(1);
  EXPECT_THROW(SpecAugment(f, {5, 1, 0, 0}, rng), PolicyError);
  EXPECT_THROW(SpecAugment(f, {0, 0, 6, 1}, rng), PolicyError);
  EXPECT_THROW(SpecAugment(f, {-1, 1, 0, 0}, rng), PolicyError);
}

}  // namespace
}  // namespace narasr
