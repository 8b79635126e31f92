// src/pipeline.cc

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

#include "narasr/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <utility>

#include "narasr/errors.h"

namespace narasr {

namespace fs = std::filesystem;

namespace {

// Desk-scale defaults. Every key a config file may set is listed here.
const std::vector<std::pair<std::string, std::string>>& Defaults() {
  static const std::vector<std::pair<std::string, std::string>> kDefaults = {
      {"seed", "1"},
      {"out", "runs"},
      {"data", "data"},
      {"train_manifest", ""},
      {"dev_manifest", ""},
      {"test_manifest", ""},
      {"vocab", ""},
      {"lm_text", ""},
      {"encoder.feat_dim", "80"},
      {"encoder.d_m", "64"},
      {"encoder.d_n", "64"},
      {"encoder.cnn_filters", "8"},
      {"encoder.kernel", "3"},
      {"encoder.pre_layers", "2"},
      {"encoder.refine_layers", "1"},
      {"encoder.post_layers", "2"},
      {"encoder.heads", "4"},
      {"encoder.d_ff", "256"},
      {"encoder.query_count", "60"},
      {"encoder.dropout", "0.1"},
      {"decoder.layers", "2"},
      {"decoder.heads", "4"},
      {"decoder.d_ff", "256"},
      {"decoder.max_positions", "64"},
      {"decoder.dropout", "0.1"},
      {"ar.layers", "2"},
      {"ar.heads", "4"},
      {"ar.d_ff", "256"},
      {"ar.dropout", "0.1"},
      {"ar.max_len", "0"},
      {"train.batch_seconds", "20"},
      {"train.accumulation", "1"},
      {"train.label_smoothing", "0.1"},
      {"train.warmup_steps", "400"},
      {"train.lr_factor", "0.2"},
      {"train.exclude_pad", "false"},
      {"train.max_updates", "0"},
      {"lm.epochs", "5"},
      {"pretrain.epochs", "5"},
      {"finetune.epochs", "30"},
      {"ar.epochs", "30"},
      {"specaug.freq_mask_width_max", "10"},
      {"specaug.freq_masks", "1"},
      {"specaug.time_mask_width_max", "10"},
      {"specaug.time_masks", "1"},
      {"mlm.mask_rate", "0.15"},
      {"mlm.batch_sentences", "32"},
  };
  return kDefaults;
}

std::string OrDefault(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback.string() : value;
}

int LastEpochNumber(const std::string& path) {
  static const std::regex re("epoch-([0-9]+)\\.ckpt$");
  std::smatch m;
  const std::string name = fs::path(path).filename().string();
  if (!std::regex_search(name, m, re)) return -1;
  return std::stoi(m[1]);
}

Vocabulary LoadVocab(const RunConfig& cfg) {
  if (!fs::exists(cfg.vocab_path)) {
    throw ConfigError("vocabulary " + cfg.vocab_path + " not found (run gen-data first)");
  }
  return Vocabulary::Read(cfg.vocab_path);
}

DecoderConfig WithVocab(DecoderConfig c, const Vocabulary& v) {
  c.vocab_size = v.size();
  return c;
}

Dataset LoadTrainSet(const RunConfig& cfg, const Vocabulary& vocab) {
  if (!fs::exists(cfg.train_manifest)) {
    throw ConfigError("training manifest " + cfg.train_manifest + " not found");
  }
  return PrepareDataset(ReadManifest(cfg.train_manifest), vocab,
                        cfg.encoder.query_count, cfg.fbank);
}

std::string RequireLast(const std::string& dir, const std::string& what,
                        const std::string& producer) {
  const auto ckpts = EpochCheckpoints(dir);
  if (ckpts.empty()) {
    throw ConfigError("missing " + what + " checkpoint in " + dir + " (run " +
                      producer + " first)");
  }
  return ckpts.back();
}

// Opens the stage log for appending and writes the header on a new file.
std::ofstream OpenLog(const std::string& dir) {
  fs::create_directories(dir);
  const fs::path path = fs::path(dir) / "train.log";
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream log(path, std::ios::app);
  if (!log) throw InputError("cannot open " + path.string());
  if (fresh) log << "stage\tepoch\tstep\tlr\tloss\n";
  return log;
}

std::string FormatG(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

}  // namespace

std::string DefaultConfigText() {
  std::string out;
  for (const auto& kv : Defaults()) out += kv.first + " = " + kv.second + "\n";
  return out;
}

RunConfig RunConfig::Load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg;
  std::set<std::string> known;
  for (const auto& kv : Defaults()) {
    cfg.values.Set(kv.first, kv.second);
    known.insert(kv.first);
  }
  if (!path.empty()) {
    const KeyValueConfig file = KeyValueConfig::ParseFile(path);
    file.RejectUnknown(known);
    for (const auto& kv : file.values()) cfg.values.Set(kv.first, kv.second);
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(o.substr(0, eq));
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    cfg.values.Set(key, trim(o.substr(eq + 1)));
  }

  const KeyValueConfig& v = cfg.values;
  long seed = 0;
  v.Get("seed", &seed);
  if (seed < 0) throw ConfigError("seed must be non-negative");
  cfg.seed = static_cast<uint64_t>(seed);
  v.Get("out", &cfg.out_dir);
  std::string data;
  v.Get("data", &data);
  std::string s;
  v.Get("train_manifest", &s);
  cfg.train_manifest = OrDefault(s, fs::path(data) / "train" / "manifest.jsonl");
  s.clear();
  v.Get("dev_manifest", &s);
  cfg.dev_manifest = OrDefault(s, fs::path(data) / "dev" / "manifest.jsonl");
  s.clear();
  v.Get("test_manifest", &s);
  cfg.test_manifest = OrDefault(s, fs::path(data) / "test" / "manifest.jsonl");
  s.clear();
  v.Get("vocab", &s);
  cfg.vocab_path = OrDefault(s, fs::path(data) / "vocab.txt");
  s.clear();
  v.Get("lm_text", &s);
  cfg.lm_text = OrDefault(s, fs::path(data) / "lm_text.txt");

  EncoderConfig& e = cfg.encoder;
  v.Get("encoder.feat_dim", &e.feat_dim);
  v.Get("encoder.d_m", &e.d_m);
  v.Get("encoder.d_n", &e.d_n);
  v.Get("encoder.cnn_filters", &e.cnn_filters);
  v.Get("encoder.kernel", &e.kernel);
  v.Get("encoder.pre_layers", &e.pre_layers);
  v.Get("encoder.refine_layers", &e.refine_layers);
  v.Get("encoder.post_layers", &e.post_layers);
  v.Get("encoder.heads", &e.heads);
  v.Get("encoder.d_ff", &e.d_ff);
  v.Get("encoder.query_count", &e.query_count);
  v.Get("encoder.dropout", &e.dropout);
  e.Validate();
  cfg.fbank.bins = e.feat_dim;

  DecoderConfig& d = cfg.decoder;
  d.d_n = e.d_n;
  v.Get("decoder.layers", &d.layers);
  v.Get("decoder.heads", &d.heads);
  v.Get("decoder.d_ff", &d.d_ff);
  v.Get("decoder.max_positions", &d.max_positions);
  v.Get("decoder.dropout", &d.dropout);
  if (d.max_positions < e.query_count) {
    throw ConfigError("decoder.max_positions must be at least encoder.query_count");
  }

  ArDecoderConfig& a = cfg.ar;
  a.d_m = e.d_m;
  v.Get("ar.layers", &a.layers);
  v.Get("ar.heads", &a.heads);
  v.Get("ar.d_ff", &a.d_ff);
  v.Get("ar.dropout", &a.dropout);
  v.Get("ar.max_len", &cfg.ar_max_len);
  if (cfg.ar_max_len <= 0) cfg.ar_max_len = e.query_count;

  for (const char* stage : {"lm", "pretrain", "finetune", "ar"}) cfg.Hyper(stage);
  return cfg;
}

TrainHyper RunConfig::Hyper(const std::string& stage) const {
  TrainHyper h;
  h.seed = seed;
  values.Get(stage + ".epochs", &h.epochs);
  values.Get("train.batch_seconds", &h.batch_seconds);
  values.Get("train.accumulation", &h.accumulation);
  values.Get("train.label_smoothing", &h.label_smoothing);
  values.Get("train.warmup_steps", &h.warmup_steps);
  values.Get("train.lr_factor", &h.lr_factor);
  values.Get("train.exclude_pad", &h.exclude_pad);
  values.Get("train.max_updates", &h.max_updates);
  values.Get("specaug.freq_mask_width_max", &h.specaug.freq_mask_width_max);
  values.Get("specaug.freq_masks", &h.specaug.freq_masks);
  values.Get("specaug.time_mask_width_max", &h.specaug.time_mask_width_max);
  values.Get("specaug.time_masks", &h.specaug.time_masks);
  values.Get("mlm.mask_rate", &h.mlm_mask_rate);
  values.Get("mlm.batch_sentences", &h.mlm_batch_sentences);
  if (h.epochs < 1) throw ConfigError(stage + ".epochs must be >= 1");
  if (h.accumulation < 1) throw ConfigError("train.accumulation must be >= 1");
  if (h.warmup_steps < 1) throw ConfigError("train.warmup_steps must be >= 1");
  if (!(h.batch_seconds > 0)) throw ConfigError("train.batch_seconds must be positive");
  if (!(h.lr_factor > 0)) throw ConfigError("train.lr_factor must be positive");
  if (h.label_smoothing < 0 || h.label_smoothing >= 1)
    throw ConfigError("train.label_smoothing must be in [0, 1)");
  if (!(h.mlm_mask_rate > 0 && h.mlm_mask_rate < 1))
    throw ConfigError("mlm.mask_rate must be in (0, 1)");
  if (h.mlm_batch_sentences < 1) throw ConfigError("mlm.batch_sentences must be >= 1");
  if (h.specaug.freq_mask_width_max < 0 || h.specaug.freq_masks < 0 ||
      h.specaug.time_mask_width_max < 0 || h.specaug.time_masks < 0)
    throw ConfigError("specaug values must be non-negative");
  return h;
}

void RunConfig::Persist(const std::string& dir) const {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "run_config.txt");
  out << values.ToString();
  if (!out) throw InputError("cannot write run_config.txt in " + dir);
}

std::string StageDir(const RunConfig& cfg, const std::string& stage) {
  return (fs::path(cfg.out_dir) / stage).string();
}

std::string FinetuneDir(const RunConfig& cfg, FinetuneMode mode) {
  return StageDir(cfg, std::string("finetune-") + ToString(mode));
}

std::vector<std::string> EpochCheckpoints(const std::string& dir) {
  std::vector<std::pair<int, std::string>> found;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const int n = LastEpochNumber(entry.path().string());
      if (n >= 0) found.emplace_back(n, entry.path().string());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

Checkpoint ResolveCheckpoint(const std::string& path, int average_last) {
  if (average_last < 1) throw ConfigError("--average-last must be >= 1");
  std::string last = path;
  if (fs::is_directory(path)) {
    last = RequireLast(path, "epoch", "a training stage");
  } else if (!fs::exists(path)) {
    throw ConfigError("checkpoint " + path + " not found");
  }
  if (average_last == 1) return LoadCheckpoint(last);
  const int n = LastEpochNumber(last);
  if (n < 0) throw ConfigError("--average-last needs an epoch-N.ckpt checkpoint, got " + last);
  std::vector<std::string> window;
  for (const std::string& p : EpochCheckpoints(fs::path(last).parent_path().string())) {
    const int k = LastEpochNumber(p);
    if (k <= n && k > n - average_last) window.push_back(p);
  }
  if (static_cast<int>(window.size()) != average_last) {
    throw ConfigError("--average-last " + std::to_string(average_last) + " needs epochs " +
                      std::to_string(n - average_last + 1) + ".." + std::to_string(n) +
                      " next to " + last);
  }
  return AverageCheckpointFiles(window);
}

StageOutcome RunTrainLm(const RunConfig& cfg) {
  const Vocabulary vocab = LoadVocab(cfg);
  if (!fs::exists(cfg.lm_text)) throw ConfigError("LM text " + cfg.lm_text + " not found");
  std::vector<TokenSequence> sentences;
  {
    std::ifstream in(cfg.lm_text);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) sentences.push_back(Encode(line, vocab, cfg.decoder.max_positions));
  }
  StageOutcome out{StageDir(cfg, "lm"), {}};
  cfg.Persist(out.dir);
  Rng rng(Rng::Mix(cfg.seed, Rng::HashString("init-lm")));
  DecoderParams decoder = DecoderParams::Create(WithVocab(cfg.decoder, vocab), rng);
  std::ofstream log = OpenLog(out.dir);
  out.result = TrainMlm(&decoder, sentences, cfg.Hyper("lm"), out.dir, &log);
  return out;
}

StageOutcome RunPretrainEncoder(const RunConfig& cfg) {
  const Vocabulary vocab = LoadVocab(cfg);
  const Checkpoint lm = LoadCheckpoint(
      RequireLast(StageDir(cfg, "lm"), "masked-LM decoder", "train-lm"));
  const DecoderConfig dc = DecoderConfigFrom(lm.metadata);
  if (dc.vocab_size != vocab.size()) {
    throw ConfigError("masked-LM decoder has vocabulary size " + std::to_string(dc.vocab_size) +
                      " but " + cfg.vocab_path + " has " + std::to_string(vocab.size()));
  }
  Rng unused(0);
  DecoderParams decoder = DecoderParams::Create(dc, unused);
  {
    ParamSet set;
    decoder.Register(&set);
    set.CopyValuesFrom(lm.tensors);
  }
  const Dataset data = LoadTrainSet(cfg, vocab);
  StageOutcome out{StageDir(cfg, "encoder-pretrain"), {}};
  cfg.Persist(out.dir);
  Rng rng(Rng::Mix(cfg.seed, Rng::HashString("init-pretrain")));
  EncoderParams encoder = EncoderParams::Create(cfg.encoder, rng);
  std::ofstream log = OpenLog(out.dir);
  out.result = PretrainEncoder(&encoder, decoder.token_embedding, data,
                               cfg.Hyper("pretrain"), out.dir, &log);
  return out;
}

StageOutcome RunFinetune(const RunConfig& cfg, FinetuneMode mode) {
  const Vocabulary vocab = LoadVocab(cfg);
  const bool want_encoder =
      mode == FinetuneMode::kFull || mode == FinetuneMode::kNoDecoderPretrain;
  const bool want_decoder =
      mode == FinetuneMode::kFull || mode == FinetuneMode::kNoEncoderPretrain;
  const std::string why = std::string("finetune --mode ") + ToString(mode) + ": ";
  std::optional<Checkpoint> enc_ckpt, dec_ckpt;
  try {
    if (want_encoder)
      enc_ckpt = LoadCheckpoint(RequireLast(StageDir(cfg, "encoder-pretrain"),
                                            "encoder-pretrain", "pretrain-encoder"));
    if (want_decoder)
      dec_ckpt = LoadCheckpoint(RequireLast(StageDir(cfg, "lm"), "masked-LM decoder",
                                            "train-lm"));
  } catch (const ConfigError& e) {
    throw ConfigError(why + e.what());
  }
  const Dataset data = LoadTrainSet(cfg, vocab);
  StageOutcome out{FinetuneDir(cfg, mode), {}};
  cfg.Persist(out.dir);
  FinetuneInit init = InitializeForFinetune(
      mode, cfg.encoder, WithVocab(cfg.decoder, vocab), enc_ckpt ? &*enc_ckpt : nullptr,
      dec_ckpt ? &*dec_ckpt : nullptr, cfg.seed);
  std::ofstream log = OpenLog(out.dir);
  out.result = Finetune(&init.encoder, &init.decoder, data, cfg.Hyper("finetune"), out.dir,
                        &log, {{"mode", ToString(mode)}});
  return out;
}

StageOutcome RunTrainAr(const RunConfig& cfg) {
  const Vocabulary vocab = LoadVocab(cfg);
  const Dataset data = LoadTrainSet(cfg, vocab);
  StageOutcome out{StageDir(cfg, "ar"), {}};
  cfg.Persist(out.dir);
  Rng rng(Rng::Mix(cfg.seed, Rng::HashString("init-ar")));
  EncoderParams encoder = EncoderParams::Create(cfg.encoder, rng);
  ArDecoderConfig ac = cfg.ar;
  ac.vocab_size = vocab.size();
  ArDecoderParams ar = ArDecoderParams::Create(ac, rng);
  std::ofstream log = OpenLog(out.dir);
  out.result = TrainAr(&encoder, &ar, data, cfg.Hyper("ar"), out.dir, &log);
  return out;
}

Baseline ParseBaseline(const std::string& text) {
  if (text == "nar") return Baseline::kNar;
  if (text == "ar") return Baseline::kAr;
  throw ConfigError("unknown baseline '" + text + "' (expected nar or ar)");
}

ScoreReport EvaluateCheckpoint(const Checkpoint& ckpt, Baseline baseline,
                               const Manifest& manifest, const Vocabulary& vocab,
                               int ar_max_len) {
  if (baseline == Baseline::kNar) {
    const NarModel model = LoadNarModel(ckpt);
    if (model.decoder.config.vocab_size != vocab.size())
      throw ConfigError("checkpoint vocabulary size differs from the vocabulary file");
    return Evaluate(manifest, [&](const FeatureSequence& f) {
      return NarGreedyDecode(f, model, vocab);
    }, FbankOptions{model.encoder.config.feat_dim});
  }
  const ArModel model = LoadArModel(ckpt, ar_max_len);
  if (model.ar.config.vocab_size != vocab.size())
    throw ConfigError("checkpoint vocabulary size differs from the vocabulary file");
  return Evaluate(manifest, [&](const FeatureSequence& f) {
    return ArGreedyDecodeUtterance(f, model, vocab);
  }, FbankOptions{model.encoder.config.feat_dim});
}

void WriteHypotheses(const ScoreReport& report, const std::string& path) {
  std::ofstream out(path);
  for (const UtteranceScore& s : report.details) out << s.id << '\t' << s.hypothesis << '\n';
  if (!out) throw InputError("cannot write " + path);
}

BenchReport RunBench(const Checkpoint& nar_ckpt, const Checkpoint& ar_ckpt,
                     const Manifest& manifest, const Vocabulary& vocab, int ar_max_len) {
  if (manifest.records.empty()) throw ContractError("empty manifest");
  const NarModel nar = LoadNarModel(nar_ckpt);
  const ArModel ar = LoadArModel(ar_ckpt, ar_max_len);
  if (nar.encoder.config.feat_dim != ar.encoder.config.feat_dim)
    throw ConfigError("NAR and AR checkpoints use different feature dimensions");
  const FbankOptions fbank{nar.encoder.config.feat_dim};
  std::vector<FeatureSequence> features;
  std::vector<double> durations;
  for (const UtteranceRecord& rec : manifest.records) {
    features.push_back(LogMelFeatures(ReadWav(manifest.ResolveAudio(rec)), fbank, rec.id));
    durations.push_back(rec.duration_sec);
  }
  SetComputeThreads(1);
  BenchReport r;
  r.utterances = static_cast<int>(features.size());
  for (double d : durations) r.audio_sec += d;
  // MeasureRtf makes one untimed warm-up call first; it is not counted.
  bool warm_up = true;
  r.rtf_nar = MeasureRtf([&](size_t i) {
    const DecodeResult d = NarGreedyDecode(features[i], nar, vocab);
    if (!std::exchange(warm_up, false)) r.nar_forwards += d.forwards;
  }, durations);
  warm_up = true;
  r.rtf_ar = MeasureRtf([&](size_t i) {
    const DecodeResult d = ArGreedyDecodeUtterance(features[i], ar, vocab);
    if (!std::exchange(warm_up, false)) {
      r.ar_forwards += d.forwards;
      r.ar_output_tokens += static_cast<long>(d.ids.size()) - 1;
    }
  }, durations);
  r.ratio = r.rtf_nar > 0 ? r.rtf_ar / r.rtf_nar : 0.0;
  return r;
}

void WriteBenchReport(const BenchReport& r, const std::string& path) {
  std::ofstream out(path);
  out << "utterances\t" << r.utterances << '\n'
      << "audio_sec\t" << FormatG(r.audio_sec, 6) << '\n'
      << "rtf_nar\t" << FormatG(r.rtf_nar, 6) << '\n'
      << "rtf_ar\t" << FormatG(r.rtf_ar, 6) << '\n'
      << "ratio\t" << FormatG(r.ratio, 6) << '\n'
      << "nar_forwards\t" << r.nar_forwards << '\n'
      << "ar_forwards\t" << r.ar_forwards << '\n'
      << "ar_output_tokens\t" << r.ar_output_tokens << '\n';
  if (!out) throw InputError("cannot write " + path);
}

}  // namespace narasr
