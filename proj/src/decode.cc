// src/decode.cc

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

#include "narasr/decode.h"

#include <cblas.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "narasr/errors.h"
#include "narasr/ops.h"
#include "narasr/trainer.h"

namespace narasr {

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

void Load(const std::function<void(ParamSet*)>& reg, const Checkpoint& ckpt) {
  ParamSet set;
  reg(&set);
  set.CopyValuesFrom(ckpt.tensors);
}

DecodeResult FinishNar(const Tensor& logits, const Vocabulary& vocab) {
  DecodeResult r;
  r.ids = ClassifyPositions(logits);
  r.hypothesis = Decode(r.ids, vocab);
  const int rows = logits.dim(0), v = logits.dim(1);
  const auto data = logits.data();
  r.top_probs.resize(rows);
  for (int i = 0; i < rows; ++i) {
    const auto row = data.subspan(static_cast<size_t>(i) * v, v);
    const double best = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - best);
    r.top_probs[i] = 1.0 / z;
  }
  r.forwards = 1;
  return r;
}

std::string FormatG(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

}  // namespace

NarModel LoadNarModel(const Checkpoint& ckpt) {
  Rng rng(0);
  NarModel m{EncoderParams::Create(EncoderConfigFrom(ckpt.metadata), rng),
             DecoderParams::Create(DecoderConfigFrom(ckpt.metadata), rng)};
  Load([&](ParamSet* s) {
    m.encoder.Register(s);
    m.decoder.Register(s);
  }, ckpt);
  return m;
}

ArModel LoadArModel(const Checkpoint& ckpt, int max_len) {
  Rng rng(0);
  ArModel m{EncoderParams::Create(EncoderConfigFrom(ckpt.metadata), rng),
            ArDecoderParams::Create(ArDecoderConfigFrom(ckpt.metadata), rng), max_len};
  Load([&](ParamSet* s) {
    m.encoder.RegisterAcoustic(s);
    m.ar.Register(s);
  }, ckpt);
  return m;
}

void SetComputeThreads(int threads) {
  openblas_set_num_threads(std::max(1, threads));
}

DecodeResult NarGreedyDecode(const FeatureSequence& features, const NarModel& model,
                             const Vocabulary& vocab) {
  NoGradGuard guard;
  Rng unused(0);
  const auto start = Clock::now();
  Tensor h_f = EncoderForward(features.frames, model.encoder, false, unused);
  DecodeResult r = FinishNar(DecoderForward(h_f, model.decoder, false, unused), vocab);
  r.wall_time_sec = Seconds(start, Clock::now());
  r.utterance_id = features.utterance_id;
  return r;
}

std::vector<DecodeResult> NarGreedyDecodeBatch(
    const std::vector<FeatureSequence>& batch, const NarModel& model,
    const Vocabulary& vocab) {
  NoGradGuard guard;
  Rng unused(0);
  const auto start = Clock::now();
  std::vector<Tensor> frames;
  for (const FeatureSequence& f : batch) frames.push_back(f.frames);
  std::vector<Tensor> h = EncoderForwardBatch(frames, model.encoder, false, unused);
  std::vector<DecodeResult> out;
  for (size_t i = 0; i < batch.size(); ++i) {
    out.push_back(FinishNar(DecoderForward(h[i], model.decoder, false, unused), vocab));
    out.back().utterance_id = batch[i].utterance_id;
  }
  const double each = Seconds(start, Clock::now()) / std::max<size_t>(1, batch.size());
  for (DecodeResult& r : out) r.wall_time_sec = each;
  return out;
}

DecodeResult ArGreedyDecodeUtterance(const FeatureSequence& features,
                                     const ArModel& model, const Vocabulary& vocab) {
  NoGradGuard guard;
  Rng unused(0);
  const auto start = Clock::now();
  DecodeResult r;
  Tensor h_a = EncodeAcoustic(features.frames, model.encoder, false, unused);
  r.ids = ArGreedyDecode(h_a, model.ar, model.max_len, &r.forwards);
  r.hypothesis = Decode(r.ids, vocab);
  r.wall_time_sec = Seconds(start, Clock::now());
  r.utterance_id = features.utterance_id;
  return r;
}

int EditDistance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1,
                         cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

CerResult Cer(const std::string& reference, const std::string& hypothesis) {
  const std::vector<std::string> ref = SplitUtf8(reference);
  const std::vector<std::string> hyp = SplitUtf8(hypothesis);
  const size_t n = ref.size(), m = hyp.size();
  CerResult r;
  r.ref_len = static_cast<int>(n);
  if (n == 0) {
    r.insertions = r.distance = static_cast<int>(m);
    r.degenerate = m > 0;
    r.rate = static_cast<double>(m);
    return r;
  }
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1));
  for (size_t i = 0; i <= n; ++i) dp[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) dp[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      dp[i][j] = std::min({dp[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           dp[i - 1][j] + 1, dp[i][j - 1] + 1});
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const int cost = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (dp[i][j] == dp[i - 1][j - 1] + cost) {
        r.substitutions += cost;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      ++r.deletions;
      --i;
    } else {
      ++r.insertions;
      --j;
    }
  }
  r.distance = dp[n][m];
  r.rate = static_cast<double>(r.distance) / static_cast<double>(n);
  return r;
}

double RtfFromTotals(double wall_sec, double audio_sec) {
  if (!(audio_sec > 0.0)) throw ContractError("total audio duration must be positive");
  return wall_sec / audio_sec;
}

double MeasureRtf(const std::function<void(size_t)>& decode,
                  const std::vector<double>& durations_sec, bool warm_up) {
  double audio = 0.0;
  for (double d : durations_sec) audio += d;
  if (!(audio > 0.0)) throw ContractError("total audio duration must be positive");
  if (warm_up) decode(0);
  double wall = 0.0;
  for (size_t i = 0; i < durations_sec.size(); ++i) {
    const auto start = Clock::now();
    decode(i);
    wall += Seconds(start, Clock::now());
  }
  return RtfFromTotals(wall, audio);
}

ScoreReport Evaluate(const Manifest& manifest, const DecodeFn& decode,
                     const FbankOptions& fbank, bool warm_up) {
  if (manifest.records.empty()) throw ContractError("empty manifest");
  ScoreReport report;
  bool warmed = !warm_up;
  for (const UtteranceRecord& rec : manifest.records) {
    UtteranceScore s;
    s.id = rec.id;
    s.reference = rec.text;
    try {
      const auto t0 = Clock::now();
      const FeatureSequence f =
          LogMelFeatures(ReadWav(manifest.ResolveAudio(rec)), fbank, rec.id);
      report.frontend_sec += Seconds(t0, Clock::now());
      if (!warmed) {
        decode(f);
        warmed = true;
      }
      const DecodeResult d = decode(f);
      s.hypothesis = d.hypothesis;
      s.top_probs = d.top_probs;
      s.wall_time_sec = d.wall_time_sec;
      s.forwards = d.forwards;
      s.cer = Cer(rec.text, d.hypothesis);
      report.substitutions += s.cer.substitutions;
      report.deletions += s.cer.deletions;
      report.insertions += s.cer.insertions;
      report.ref_chars += s.cer.ref_len;
      report.decode_sec += d.wall_time_sec;
      report.audio_sec += rec.duration_sec;
    } catch (const std::exception& e) {
      s.error = e.what();
      ++report.failures;
    }
    ++report.utterances;
    report.details.push_back(std::move(s));
  }
  const long edits = report.substitutions + report.deletions + report.insertions;
  report.cer = static_cast<double>(edits) /
               static_cast<double>(std::max(1L, report.ref_chars));
  if (report.audio_sec > 0.0) report.rtf = RtfFromTotals(report.decode_sec, report.audio_sec);
  return report;
}

void WriteReport(const ScoreReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "summary.tsv");
    out << "utterances\t" << report.utterances << '\n'
        << "failures\t" << report.failures << '\n'
        << "ref_chars\t" << report.ref_chars << '\n'
        << "substitutions\t" << report.substitutions << '\n'
        << "deletions\t" << report.deletions << '\n'
        << "insertions\t" << report.insertions << '\n'
        << "cer\t" << FormatG(report.cer, 6) << '\n';
    for (const UtteranceScore& s : report.details)
      if (!s.error.empty()) out << "failed\t" << s.id << '\t' << s.error << '\n';
    if (!out) throw InputError("cannot write " + (base / "summary.tsv").string());
  }
  {
    std::ofstream out(base / "details.jsonl");
    for (const UtteranceScore& s : report.details) {
      nlohmann::ordered_json j;
      j["id"] = s.id;
      j["reference"] = s.reference;
      j["hypothesis"] = s.hypothesis;
      j["cer"] = s.cer.rate;
      j["substitutions"] = s.cer.substitutions;
      j["deletions"] = s.cer.deletions;
      j["insertions"] = s.cer.insertions;
      j["ref_len"] = s.cer.ref_len;
      j["degenerate"] = s.cer.degenerate;
      j["forwards"] = s.forwards;
      std::vector<double> probs;
      for (double p : s.top_probs) probs.push_back(std::stod(FormatG(p, 6)));
      j["top_probs"] = probs;
      if (!s.error.empty()) j["error"] = s.error;
      out << j.dump() << '\n';
    }
    if (!out) throw InputError("cannot write " + (base / "details.jsonl").string());
  }
  {
    std::ofstream out(base / "timing.tsv");
    out << "audio_sec\t" << FormatG(report.audio_sec, 6) << '\n'
        << "decode_sec\t" << FormatG(report.decode_sec, 6) << '\n'
        << "frontend_sec\t" << FormatG(report.frontend_sec, 6) << '\n'
        << "rtf\t" << FormatG(report.rtf, 6) << '\n';
    for (const UtteranceScore& s : report.details)
      out << "wall_sec\t" << s.id << '\t' << FormatG(s.wall_time_sec, 6) << '\n';
  }
}

}  // namespace narasr
