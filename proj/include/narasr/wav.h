// narasr/wav.h

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

#ifndef NARASR_WAV_H_
#define NARASR_WAV_H_

#include <string>
#include <vector>

namespace narasr {

struct Waveform {
  std::vector<double> samples;  // nominally in [-1, 1)
  int sample_rate = 16000;

  double duration_sec() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Single-channel 16-bit little-endian PCM only. Throws InputError on anything
// else or on I/O failure.
Waveform ReadWav(const std::string& path);

// Samples are clipped to [-1, 1] and quantized to 16 bits.
void WriteWav(const std::string& path, const Waveform& wave);

}  // namespace narasr

#endif  // NARASR_WAV_H_
