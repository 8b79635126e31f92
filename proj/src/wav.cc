// src/wav.cc

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

#include "narasr/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "narasr/errors.h"

namespace narasr {

namespace {

uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open wav file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError(path + " is not a RIFF/WAVE file");
  }
  Waveform wave;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_size = ReadU32(&bytes[pos + 4]);
    const size_t body = pos + 8;
    if (body + chunk_size > bytes.size()) {
      throw InputError(path + ": truncated chunk");
    }
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (chunk_size < 16) throw InputError(path + ": short fmt chunk");
      const uint16_t format = ReadU16(&bytes[body]);
      const uint16_t channels = ReadU16(&bytes[body + 2]);
      wave.sample_rate = static_cast<int>(ReadU32(&bytes[body + 4]));
      const uint16_t bits = ReadU16(&bytes[body + 14]);
      if (format != 1 || channels != 1 || bits != 16) {
        throw InputError(path + ": only mono 16-bit PCM is supported");
      }
      if (wave.sample_rate <= 0) throw InputError(path + ": bad sample rate");
      have_fmt = true;
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      if (!have_fmt) throw InputError(path + ": data chunk before fmt chunk");
      const size_t count = chunk_size / 2;
      wave.samples.resize(count);
      for (size_t i = 0; i < count; ++i) {
        const auto v = static_cast<int16_t>(ReadU16(&bytes[body + 2 * i]));
        wave.samples[i] = v / 32768.0;
      }
      return wave;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw InputError(path + ": no data chunk");
}

void WriteWav(const std::string& path, const Waveform& wave) {
  std::string out;
  const auto data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  PutU32(&out, 36 + data_bytes);
  out.append("WAVEfmt ");
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<uint32_t>(wave.sample_rate) * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out.append("data");
  PutU32(&out, data_bytes);
  for (double s : wave.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    const long q = std::lround(clipped * 32767.0);
    PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write wav file " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw InputError("failed writing " + path);
}

}  // namespace narasr
