// src/corpus.cc

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

#include "narasr/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "narasr/errors.h"
#include "narasr/rng.h"
#include "narasr/vocab.h"

namespace narasr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Manifest::ResolveAudio(const UtteranceRecord& rec) const {
  const fs::path audio(rec.audio_path);
  if (audio.is_absolute() || path.empty()) return audio.string();
  return (fs::path(path).parent_path() / audio).string();
}

Manifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path);
  Manifest m;
  m.path = path;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!row.is_object()) throw InputError(where + "expected a JSON object");
    UtteranceRecord rec;
    try {
      rec.id = row.at("id").get<std::string>();
      rec.audio_path = row.at("audio_path").get<std::string>();
      rec.duration_sec = row.at("duration_sec").get<double>();
      rec.text = row.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw InputError(where + "bad or missing field (" + e.what() + ")");
    }
    if (!(rec.duration_sec > 0.0)) throw InputError(where + "duration_sec must be positive");
    if (!ids.insert(rec.id).second) throw InputError(where + "duplicate id " + rec.id);
    m.records.push_back(std::move(rec));
  }
  return m;
}

void WriteManifest(const std::string& path,
                   const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + path);
  for (const UtteranceRecord& r : records) {
    json row;
    row["id"] = r.id;
    row["audio_path"] = r.audio_path;
    row["duration_sec"] = r.duration_sec;
    row["text"] = r.text;
    out << row.dump() << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

SyntheticTaskSpec SyntheticTaskSpec::FromConfig(const KeyValueConfig& cfg) {
  cfg.RejectUnknown({"vocab_size", "min_tokens", "max_tokens", "tone_base_hz",
                     "tone_step_ratio", "token_duration_ms", "tone_amplitude",
                     "noise_amplitude", "sample_rate", "train_count",
                     "dev_count", "test_count", "successors",
                     "grammar_strength", "lm_sentences"});
  SyntheticTaskSpec s;
  cfg.Get("vocab_size", &s.vocab_size);
  cfg.Get("min_tokens", &s.min_tokens);
  cfg.Get("max_tokens", &s.max_tokens);
  cfg.Get("tone_base_hz", &s.tone_base_hz);
  cfg.Get("tone_step_ratio", &s.tone_step_ratio);
  cfg.Get("token_duration_ms", &s.token_duration_ms);
  cfg.Get("tone_amplitude", &s.tone_amplitude);
  cfg.Get("noise_amplitude", &s.noise_amplitude);
  cfg.Get("sample_rate", &s.sample_rate);
  cfg.Get("train_count", &s.train_count);
  cfg.Get("dev_count", &s.dev_count);
  cfg.Get("test_count", &s.test_count);
  cfg.Get("successors", &s.successors);
  cfg.Get("grammar_strength", &s.grammar_strength);
  cfg.Get("lm_sentences", &s.lm_sentences);
  return s;
}

void SyntheticTaskSpec::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw SpecError("synthetic spec: " + msg);
  };
  require(vocab_size >= 1 && vocab_size <= 26, "vocab_size must be in 1..26");
  require(min_tokens >= 1 && max_tokens >= min_tokens,
          "min_tokens/max_tokens must satisfy 1 <= min <= max");
  require(sample_rate > 0, "sample_rate must be positive");
  require(tone_base_hz > 0.0, "tone_base_hz must be positive");
  require(tone_step_ratio >= 1.0, "tone_step_ratio must be >= 1");
  const double top = ToneHz(vocab_size - 1);
  require(top < sample_rate / 2.0,
          "tone_base_hz/tone_step_ratio put the highest tone at " +
              std::to_string(top) + " Hz, above the Nyquist frequency " +
              std::to_string(sample_rate / 2.0) + " Hz");
  require(token_duration_ms > 0.0, "token_duration_ms must be positive");
  require(tone_amplitude >= 0.0 && noise_amplitude >= 0.0,
          "amplitudes must be non-negative");
  require(train_count >= 0 && dev_count >= 0 && test_count >= 0 && lm_sentences >= 0,
          "counts must be non-negative");
  require(successors >= 1 && successors <= vocab_size,
          "successors must be in 1..vocab_size");
  require(grammar_strength >= 0.0 && grammar_strength <= 1.0,
          "grammar_strength must be in [0, 1]");
}

std::string SyntheticTaskSpec::Alphabet() const {
  std::string s;
  for (int k = 0; k < vocab_size; ++k) s.push_back(static_cast<char>('a' + k));
  return s;
}

double SyntheticTaskSpec::ToneHz(int token) const {
  return tone_base_hz * std::pow(tone_step_ratio, token);
}

namespace {

std::vector<std::vector<int>> SuccessorTable(const SyntheticTaskSpec& spec,
                                             uint64_t seed) {
  Rng rng(Rng::Mix(seed, Rng::HashString("grammar")));
  std::vector<std::vector<int>> table(spec.vocab_size);
  for (auto& row : table) {
    std::vector<int> order(spec.vocab_size);
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < spec.successors; ++i) {
      std::swap(order[i], order[rng.UniformInt(i, spec.vocab_size - 1)]);
      row.push_back(order[i]);
    }
  }
  return table;
}

std::string TranscriptFromTable(const SyntheticTaskSpec& spec,
                                const std::vector<std::vector<int>>& table,
                                uint64_t seed, const std::string& id) {
  Rng rng(Rng::Mix(seed, Rng::HashString(id)));
  const int len = rng.UniformInt(spec.min_tokens, spec.max_tokens);
  std::string text;
  int prev = rng.UniformInt(0, spec.vocab_size - 1);
  text.push_back(static_cast<char>('a' + prev));
  for (int i = 1; i < len; ++i) {
    int next;
    if (rng.Uniform() < spec.grammar_strength) {
      next = table[prev][rng.UniformInt(0, spec.successors - 1)];
    } else {
      next = rng.UniformInt(0, spec.vocab_size - 1);
    }
    text.push_back(static_cast<char>('a' + next));
    prev = next;
  }
  return text;
}

std::string UtteranceId(const char* split, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%05d", split, index);
  return buf;
}

}  // namespace

std::string SyntheticTranscript(const SyntheticTaskSpec& spec, uint64_t seed,
                                const std::string& id) {
  return TranscriptFromTable(spec, SuccessorTable(spec, seed), seed, id);
}

Waveform SynthesizeUtterance(const SyntheticTaskSpec& spec, uint64_t seed,
                             const std::string& id, const std::string& text) {
  Rng rng(Rng::Mix(Rng::Mix(seed, Rng::HashString(id)), Rng::HashString("audio")));
  const int per_token = static_cast<int>(
      std::lround(spec.token_duration_ms * spec.sample_rate / 1000.0));
  Waveform w;
  w.sample_rate = spec.sample_rate;
  w.samples.reserve(static_cast<size_t>(per_token) * text.size());
  for (char c : text) {
    const int token = c - 'a';
    if (token < 0 || token >= spec.vocab_size) {
      throw InputError(std::string("character '") + c + "' is not a synthetic token");
    }
    const double hz = spec.ToneHz(token);
    for (int i = 0; i < per_token; ++i) {
      w.samples.push_back(spec.tone_amplitude *
                              std::sin(2.0 * M_PI * hz * i / spec.sample_rate) +
                          spec.noise_amplitude * rng.Normal());
    }
  }
  return w;
}

void GenerateSyntheticCorpus(const SyntheticTaskSpec& spec, uint64_t seed,
                             const std::string& out_dir) {
  spec.Validate();
  const auto table = SuccessorTable(spec, seed);
  const fs::path root(out_dir);
  fs::create_directories(root);
  BuildVocab({spec.Alphabet()}).Write((root / "vocab.txt").string());

  const std::pair<const char*, int> splits[] = {
      {"train", spec.train_count}, {"dev", spec.dev_count}, {"test", spec.test_count}};
  for (const auto& [split, count] : splits) {
    fs::create_directories(root / split / "wav");
    std::vector<UtteranceRecord> records;
    for (int i = 0; i < count; ++i) {
      UtteranceRecord rec;
      rec.id = UtteranceId(split, i);
      rec.text = TranscriptFromTable(spec, table, seed, rec.id);
      const Waveform wave = SynthesizeUtterance(spec, seed, rec.id, rec.text);
      rec.audio_path = "wav/" + rec.id + ".wav";
      WriteWav((root / split / rec.audio_path).string(), wave);
      rec.duration_sec = wave.duration_sec();
      records.push_back(std::move(rec));
    }
    WriteManifest((root / split / "manifest.jsonl").string(), records);
  }

  std::ofstream lm(root / "lm_text.txt", std::ios::binary);
  if (!lm) throw InputError("cannot write " + (root / "lm_text.txt").string());
  for (int i = 0; i < spec.lm_sentences; ++i)
    lm << TranscriptFromTable(spec, table, seed, UtteranceId("lm", i)) << '\n';
}

CorpusStats ComputeCorpusStats(const Manifest& manifest) {
  if (manifest.records.empty()) throw ContractError("empty manifest");
  CorpusStats s;
  s.utterances = static_cast<long>(manifest.records.size());
  s.duration_min = s.tokens_min = 1e300;
  s.duration_max = s.tokens_max = 0.0;
  double total_sec = 0.0, total_tokens = 0.0;
  for (const UtteranceRecord& r : manifest.records) {
    const double tokens = static_cast<double>(SplitUtf8(r.text).size());
    total_sec += r.duration_sec;
    total_tokens += tokens;
    s.duration_min = std::min(s.duration_min, r.duration_sec);
    s.duration_max = std::max(s.duration_max, r.duration_sec);
    s.tokens_min = std::min(s.tokens_min, tokens);
    s.tokens_max = std::max(s.tokens_max, tokens);
  }
  s.hours = total_sec / 3600.0;
  s.duration_avg = total_sec / s.utterances;
  s.tokens_avg = total_tokens / s.utterances;
  return s;
}

std::string FormatCorpusStats(const CorpusStats& s) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "#Utterances\t%ld\n"
                "#Hours\t%.4f\n"
                "#Speakers\tn/a\n"
                "Duration (Sec.) Min.\t%.3f\n"
                "Duration (Sec.) Max.\t%.3f\n"
                "Duration (Sec.) Avg.\t%.3f\n"
                "#Tokens/Sentence Min.\t%.1f\n"
                "#Tokens/Sentence Max.\t%.1f\n"
                "#Tokens/Sentence Avg.\t%.1f\n",
                s.utterances, s.hours, s.duration_min, s.duration_max,
                s.duration_avg, s.tokens_min, s.tokens_max, s.tokens_avg);
  return buf;
}

std::vector<std::vector<int>> BatchByDuration(const Manifest& manifest,
                                              double budget_seconds,
                                              uint64_t seed) {
  const auto& recs = manifest.records;
  for (const UtteranceRecord& r : recs) {
    if (r.duration_sec > budget_seconds) {
      throw ConfigError("utterance " + r.id + " (" + std::to_string(r.duration_sec) +
                        " s) exceeds the batch budget of " +
                        std::to_string(budget_seconds) + " s");
    }
  }
  std::vector<int> order(recs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return recs[a].duration_sec < recs[b].duration_sec;
  });
  std::vector<std::vector<int>> batches;
  double used = 0.0;
  for (int idx : order) {
    if (batches.empty() || used + recs[idx].duration_sec > budget_seconds) {
      batches.emplace_back();
      used = 0.0;
    }
    batches.back().push_back(idx);
    used += recs[idx].duration_sec;
  }
  Rng rng(seed);
  for (int i = static_cast<int>(batches.size()) - 1; i > 0; --i)
    std::swap(batches[i], batches[rng.UniformInt(0, i)]);
  return batches;
}

}  // namespace narasr
