// src/trainer.cc

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

#include "narasr/trainer.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "narasr/errors.h"
#include "narasr/ops.h"

namespace narasr {

namespace fs = std::filesystem;

Dataset PrepareDataset(const Manifest& manifest, const Vocabulary& vocab,
                       int target_len, const FbankOptions& fbank) {
  Dataset data;
  data.manifest = manifest;
  for (const UtteranceRecord& rec : manifest.records) {
    PreparedUtterance utt;
    utt.id = rec.id;
    utt.features =
        LogMelFeatures(ReadWav(manifest.ResolveAudio(rec)), fbank, rec.id).frames;
    utt.tokens = Encode(rec.text, vocab, target_len);
    utt.duration_sec = rec.duration_sec;
    data.utterances.push_back(std::move(utt));
  }
  return data;
}

namespace {

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void LogLine(std::ostream* log, const std::string& stage, int epoch, long step,
             double lr, double loss, const char* note = nullptr) {
  if (log == nullptr) return;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s\t%d\t%ld\t%.17g\t%.6f", stage.c_str(),
                epoch, step, lr, loss);
  *log << buf;
  if (note != nullptr) *log << '\t' << note;
  *log << '\n';
  log->flush();
}

int GetInt(const std::map<std::string, std::string>& meta, const std::string& key,
           int fallback) {
  auto it = meta.find(key);
  if (it == meta.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw CheckpointError("metadata " + key + " is not an integer: " + it->second);
  }
}

double GetDouble(const std::map<std::string, std::string>& meta,
                 const std::string& key, double fallback) {
  auto it = meta.find(key);
  if (it == meta.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw CheckpointError("metadata " + key + " is not a number: " + it->second);
  }
}

// Clamp mask widths to this utterance's axes: short utterances would
// otherwise turn a corpus-wide policy into an error.
SpecAugmentPolicy ClampPolicy(SpecAugmentPolicy p, int frames, int bins) {
  p.time_mask_width_max = std::min(p.time_mask_width_max, frames);
  p.freq_mask_width_max = std::min(p.freq_mask_width_max, bins);
  return p;
}

bool PolicyActive(const SpecAugmentPolicy& p) {
  return (p.freq_masks > 0 && p.freq_mask_width_max > 0) ||
         (p.time_masks > 0 && p.time_mask_width_max > 0);
}

Tensor TrainingFeatures(const PreparedUtterance& utt, const TrainHyper& hyper,
                        bool training, Rng& rng) {
  if (!training || !PolicyActive(hyper.specaug)) return utt.features;
  FeatureSequence f;
  f.frames = utt.features;
  SpecAugmentPolicy p =
      ClampPolicy(hyper.specaug, utt.features.dim(0), utt.features.dim(1));
  return SpecAugment(f, p, rng).frames;
}

std::vector<uint8_t> PositionMask(const TokenSequence& tokens, bool exclude_pad) {
  if (!exclude_pad) return {};
  std::vector<uint8_t> mask(tokens.ids.size(), 0);
  std::fill_n(mask.begin(), tokens.true_length, 1);
  return mask;
}

std::function<std::vector<std::vector<int>>(int)> DurationBatches(
    const Dataset& data, const TrainHyper& hyper) {
  return [&data, hyper](int epoch) {
    return BatchByDuration(data.manifest, hyper.batch_seconds,
                           Rng::Mix(hyper.seed, static_cast<uint64_t>(epoch)));
  };
}

void CheckVocabulary(const Dataset& data, int vocab_size) {
  for (const PreparedUtterance& u : data.utterances)
    for (int id : u.tokens.ids)
      if (id >= vocab_size) {
        throw ConfigError("utterance " + u.id + " uses token id " +
                          std::to_string(id) + " but the model vocabulary has " +
                          std::to_string(vocab_size) + " entries");
      }
}

void LoadInto(const std::function<void(ParamSet*)>& reg, const Checkpoint& ckpt) {
  ParamSet set;
  reg(&set);
  set.CopyValuesFrom(ckpt.tensors);
}

}  // namespace

LoopResult RunTrainingLoop(const TrainingLoop& loop) {
  if (loop.accumulation < 1) throw ConfigError("accumulation must be >= 1");
  if (loop.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!loop.checkpoint_dir.empty()) fs::create_directories(loop.checkpoint_dir);
  Adam adam(loop.trainable);
  Rng rng(Rng::Mix(loop.seed, Rng::HashString(loop.stage)));
  ParamSet trainable = loop.trainable;
  trainable.ZeroGrad();

  LoopResult result;
  int pending_batches = 0, pending_items = 0;
  double pending_loss = 0.0;
  bool stop = false;

  auto update = [&](int epoch) {
    if (pending_items == 0) {
      LogLine(loop.log, loop.stage, epoch, adam.step(), 0.0, 0.0,
              "skipped: no loss terms");
    } else {
      const double lr = NoamLr(adam.step() + 1, loop.schedule);
      adam.Step(lr);
      const double mean = pending_loss / pending_items;
      if (result.updates == 0) result.first_loss = mean;
      result.last_loss = mean;
      result.update_losses.push_back(mean);
      ++result.updates;
      LogLine(loop.log, loop.stage, epoch, adam.step(), lr, mean);
    }
    trainable.ZeroGrad();
    pending_batches = pending_items = 0;
    pending_loss = 0.0;
    if (loop.max_updates > 0 && result.updates >= loop.max_updates) stop = true;
  };

  for (int epoch = 1; epoch <= loop.epochs && !stop; ++epoch) {
    for (const std::vector<int>& batch : loop.batches(epoch)) {
      for (int item : batch) {
        Tensor l = loop.loss(item, rng);
        if (!l.defined()) continue;
        Backward(l);
        pending_loss += l.item();
        ++pending_items;
      }
      if (++pending_batches == loop.accumulation) update(epoch);
      if (stop) break;
    }
    if (pending_batches > 0) update(epoch);
    if (!loop.checkpoint_dir.empty()) {
      Checkpoint ckpt = Checkpoint::FromParams(loop.saved);
      ckpt.metadata = loop.metadata;
      ckpt.metadata["stage"] = loop.stage;
      ckpt.metadata["epoch"] = std::to_string(epoch);
      ckpt.metadata["step"] = std::to_string(adam.step());
      ckpt.metadata["loss"] = FormatDouble(result.last_loss);
      const std::string path =
          (fs::path(loop.checkpoint_dir) / ("epoch-" + std::to_string(epoch) + ".ckpt"))
              .string();
      SaveCheckpoint(path, ckpt);
      result.checkpoints.push_back(path);
    }
  }
  return result;
}

void PutConfig(const EncoderConfig& c, std::map<std::string, std::string>* m) {
  (*m)["encoder.feat_dim"] = std::to_string(c.feat_dim);
  (*m)["encoder.d_m"] = std::to_string(c.d_m);
  (*m)["encoder.d_n"] = std::to_string(c.d_n);
  (*m)["encoder.cnn_filters"] = std::to_string(c.cnn_filters);
  (*m)["encoder.kernel"] = std::to_string(c.kernel);
  (*m)["encoder.pre_layers"] = std::to_string(c.pre_layers);
  (*m)["encoder.refine_layers"] = std::to_string(c.refine_layers);
  (*m)["encoder.post_layers"] = std::to_string(c.post_layers);
  (*m)["encoder.heads"] = std::to_string(c.heads);
  (*m)["encoder.d_ff"] = std::to_string(c.d_ff);
  (*m)["encoder.query_count"] = std::to_string(c.query_count);
  (*m)["encoder.dropout"] = FormatDouble(c.dropout);
}

void PutConfig(const DecoderConfig& c, std::map<std::string, std::string>* m) {
  (*m)["decoder.d_n"] = std::to_string(c.d_n);
  (*m)["decoder.layers"] = std::to_string(c.layers);
  (*m)["decoder.heads"] = std::to_string(c.heads);
  (*m)["decoder.d_ff"] = std::to_string(c.d_ff);
  (*m)["decoder.max_positions"] = std::to_string(c.max_positions);
  (*m)["decoder.vocab_size"] = std::to_string(c.vocab_size);
  (*m)["decoder.dropout"] = FormatDouble(c.dropout);
}

void PutConfig(const ArDecoderConfig& c, std::map<std::string, std::string>* m) {
  (*m)["ar.d_m"] = std::to_string(c.d_m);
  (*m)["ar.layers"] = std::to_string(c.layers);
  (*m)["ar.heads"] = std::to_string(c.heads);
  (*m)["ar.d_ff"] = std::to_string(c.d_ff);
  (*m)["ar.vocab_size"] = std::to_string(c.vocab_size);
  (*m)["ar.dropout"] = FormatDouble(c.dropout);
}

EncoderConfig EncoderConfigFrom(const std::map<std::string, std::string>& m) {
  if (!m.count("encoder.d_m")) throw CheckpointError("checkpoint has no encoder config");
  EncoderConfig c;
  c.feat_dim = GetInt(m, "encoder.feat_dim", c.feat_dim);
  c.d_m = GetInt(m, "encoder.d_m", c.d_m);
  c.d_n = GetInt(m, "encoder.d_n", c.d_n);
  c.cnn_filters = GetInt(m, "encoder.cnn_filters", c.cnn_filters);
  c.kernel = GetInt(m, "encoder.kernel", c.kernel);
  c.pre_layers = GetInt(m, "encoder.pre_layers", c.pre_layers);
  c.refine_layers = GetInt(m, "encoder.refine_layers", c.refine_layers);
  c.post_layers = GetInt(m, "encoder.post_layers", c.post_layers);
  c.heads = GetInt(m, "encoder.heads", c.heads);
  c.d_ff = GetInt(m, "encoder.d_ff", c.d_ff);
  c.query_count = GetInt(m, "encoder.query_count", c.query_count);
  c.dropout = GetDouble(m, "encoder.dropout", c.dropout);
  return c;
}

DecoderConfig DecoderConfigFrom(const std::map<std::string, std::string>& m) {
  if (!m.count("decoder.d_n")) throw CheckpointError("checkpoint has no decoder config");
  DecoderConfig c;
  c.d_n = GetInt(m, "decoder.d_n", c.d_n);
  c.layers = GetInt(m, "decoder.layers", c.layers);
  c.heads = GetInt(m, "decoder.heads", c.heads);
  c.d_ff = GetInt(m, "decoder.d_ff", c.d_ff);
  c.max_positions = GetInt(m, "decoder.max_positions", c.max_positions);
  c.vocab_size = GetInt(m, "decoder.vocab_size", c.vocab_size);
  c.dropout = GetDouble(m, "decoder.dropout", c.dropout);
  return c;
}

ArDecoderConfig ArDecoderConfigFrom(const std::map<std::string, std::string>& m) {
  if (!m.count("ar.d_m")) throw CheckpointError("checkpoint has no ar config");
  ArDecoderConfig c;
  c.d_m = GetInt(m, "ar.d_m", c.d_m);
  c.layers = GetInt(m, "ar.layers", c.layers);
  c.heads = GetInt(m, "ar.heads", c.heads);
  c.d_ff = GetInt(m, "ar.d_ff", c.d_ff);
  c.vocab_size = GetInt(m, "ar.vocab_size", c.vocab_size);
  c.dropout = GetDouble(m, "ar.dropout", c.dropout);
  return c;
}

LoopResult TrainMlm(DecoderParams* decoder, const std::vector<TokenSequence>& sentences,
                    const TrainHyper& hyper, const std::string& checkpoint_dir,
                    std::ostream* log) {
  if (sentences.empty()) throw InputError("no sentences for masked-LM training");
  if (hyper.mlm_batch_sentences < 1) throw ConfigError("mlm_batch_sentences must be >= 1");
  // Sentences are trained at their own length; padding carries no signal.
  std::vector<TokenSequence> trimmed;
  for (const TokenSequence& s : sentences) {
    TokenSequence t = s;
    t.ids.resize(s.true_length);
    for (int id : t.ids)
      if (id >= decoder->config.vocab_size)
        throw ConfigError("sentence token id " + std::to_string(id) +
                          " outside the decoder vocabulary");
    trimmed.push_back(std::move(t));
  }
  TrainingLoop loop;
  loop.stage = "mlm";
  decoder->Register(&loop.trainable);
  loop.saved = loop.trainable;
  const int n = static_cast<int>(trimmed.size());
  const int per_batch = hyper.mlm_batch_sentences;
  const uint64_t seed = hyper.seed;
  loop.batches = [n, per_batch, seed](int epoch) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::Mix(seed, Rng::HashString("mlm-epoch-" + std::to_string(epoch))));
    for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.UniformInt(0, i)]);
    std::vector<std::vector<int>> batches;
    for (int i = 0; i < n; i += per_batch)
      batches.emplace_back(order.begin() + i, order.begin() + std::min(n, i + per_batch));
    return batches;
  };
  const double rate = hyper.mlm_mask_rate;
  loop.loss = [&trimmed, decoder, rate](int item, Rng& rng) -> Tensor {
    MlmSample sample = MlmCorrupt(trimmed[item], rate, decoder->config.vocab_size, rng);
    if (sample.positions.empty()) return Tensor();
    return MlmLoss(sample, *decoder, true, rng);
  };
  loop.schedule = {decoder->config.d_n, hyper.warmup_steps, hyper.lr_factor};
  loop.epochs = hyper.epochs;
  loop.accumulation = hyper.accumulation;
  loop.max_updates = hyper.max_updates;
  loop.seed = hyper.seed;
  loop.checkpoint_dir = checkpoint_dir;
  PutConfig(decoder->config, &loop.metadata);
  loop.log = log;
  return RunTrainingLoop(loop);
}

LoopResult PretrainEncoder(EncoderParams* encoder, const Tensor& token_embedding,
                           const Dataset& data, const TrainHyper& hyper,
                           const std::string& checkpoint_dir, std::ostream* log) {
  const EncoderConfig& c = encoder->config;
  if (token_embedding.rank() != 2 || token_embedding.dim(1) != c.d_n) {
    throw ConfigError("token embedding " + ShapeToString(token_embedding.shape()) +
                      " does not match encoder output width " + std::to_string(c.d_n));
  }
  const int vocab = token_embedding.dim(0);
  CheckVocabulary(data, vocab);
  Tensor head;
  {
    NoGradGuard guard;
    head = Transpose(token_embedding.Detach());
  }
  head = Tensor::FromVector(head.shape(),
                            std::vector<double>(head.data().begin(), head.data().end()),
                            true);
  TrainingLoop loop;
  loop.stage = "encoder-pretrain";
  encoder->Register(&loop.saved);
  loop.trainable = loop.saved;
  loop.trainable.Add("pretrain.head.W", head);
  loop.batches = DurationBatches(data, hyper);
  loop.loss = [&data, encoder, head, hyper](int item, Rng& rng) {
    const PreparedUtterance& utt = data.utterances[item];
    Tensor h_f = EncoderForward(TrainingFeatures(utt, hyper, true, rng), *encoder, true, rng);
    const auto mask = PositionMask(utt.tokens, hyper.exclude_pad);
    return LabelSmoothedNll(Matmul(h_f, head), utt.tokens.ids, hyper.label_smoothing, mask);
  };
  loop.schedule = {c.d_m, hyper.warmup_steps, hyper.lr_factor};
  loop.epochs = hyper.epochs;
  loop.accumulation = hyper.accumulation;
  loop.max_updates = hyper.max_updates;
  loop.seed = hyper.seed;
  loop.checkpoint_dir = checkpoint_dir;
  PutConfig(c, &loop.metadata);
  loop.log = log;
  return RunTrainingLoop(loop);
}

FinetuneMode ParseFinetuneMode(const std::string& text) {
  if (text == "full") return FinetuneMode::kFull;
  if (text == "no-encoder-pretrain") return FinetuneMode::kNoEncoderPretrain;
  if (text == "no-decoder-pretrain") return FinetuneMode::kNoDecoderPretrain;
  if (text == "scratch") return FinetuneMode::kScratch;
  throw ConfigError("unknown finetune mode '" + text +
                    "' (expected full, no-encoder-pretrain, no-decoder-pretrain "
                    "or scratch)");
}

const char* ToString(FinetuneMode mode) {
  switch (mode) {
    case FinetuneMode::kFull: return "full";
    case FinetuneMode::kNoEncoderPretrain: return "no-encoder-pretrain";
    case FinetuneMode::kNoDecoderPretrain: return "no-decoder-pretrain";
    case FinetuneMode::kScratch: return "scratch";
  }
  return "?";
}

FinetuneInit InitializeForFinetune(FinetuneMode mode,
                                   const EncoderConfig& encoder_config,
                                   const DecoderConfig& decoder_config,
                                   const Checkpoint* encoder_pretrained,
                                   const Checkpoint* decoder_pretrained,
                                   uint64_t seed) {
  const bool want_encoder =
      mode == FinetuneMode::kFull || mode == FinetuneMode::kNoDecoderPretrain;
  const bool want_decoder =
      mode == FinetuneMode::kFull || mode == FinetuneMode::kNoEncoderPretrain;
  if (want_encoder && encoder_pretrained == nullptr) {
    throw ConfigError(std::string("mode ") + ToString(mode) +
                      " needs an encoder-pretrain checkpoint");
  }
  if (want_decoder && decoder_pretrained == nullptr) {
    throw ConfigError(std::string("mode ") + ToString(mode) +
                      " needs a masked-LM decoder checkpoint");
  }
  Rng rng(Rng::Mix(seed, Rng::HashString("finetune-init")));
  FinetuneInit init{EncoderParams::Create(encoder_config, rng),
                    DecoderParams::Create(decoder_config, rng)};
  if (want_encoder) {
    LoadInto([&](ParamSet* s) { init.encoder.Register(s); }, *encoder_pretrained);
  }
  if (want_decoder) {
    LoadInto([&](ParamSet* s) { init.decoder.Register(s); }, *decoder_pretrained);
  }
  return init;
}

Tensor NarLoss(const PreparedUtterance& utt, const EncoderParams& encoder,
               const DecoderParams& decoder, const TrainHyper& hyper,
               bool training, Rng& rng) {
  Tensor h_f = EncoderForward(TrainingFeatures(utt, hyper, training, rng), encoder,
                              training, rng);
  Tensor logits = DecoderForward(h_f, decoder, training, rng);
  const auto mask = PositionMask(utt.tokens, hyper.exclude_pad);
  return LabelSmoothedNll(logits, utt.tokens.ids, hyper.label_smoothing, mask);
}

LoopResult Finetune(EncoderParams* encoder, DecoderParams* decoder,
                    const Dataset& data, const TrainHyper& hyper,
                    const std::string& checkpoint_dir, std::ostream* log,
                    const std::map<std::string, std::string>& extra_meta) {
  if (encoder->config.d_n != decoder->config.d_n) {
    throw ConfigError("encoder d_n " + std::to_string(encoder->config.d_n) +
                      " differs from decoder d_n " + std::to_string(decoder->config.d_n));
  }
  if (encoder->config.query_count > decoder->config.max_positions) {
    throw ConfigError("L' exceeds the decoder's max_positions");
  }
  CheckVocabulary(data, decoder->config.vocab_size);
  TrainingLoop loop;
  loop.stage = "finetune";
  encoder->Register(&loop.trainable);
  decoder->Register(&loop.trainable);
  loop.saved = loop.trainable;
  loop.batches = DurationBatches(data, hyper);
  loop.loss = [&data, encoder, decoder, hyper](int item, Rng& rng) {
    return NarLoss(data.utterances[item], *encoder, *decoder, hyper, true, rng);
  };
  loop.schedule = {encoder->config.d_m, hyper.warmup_steps, hyper.lr_factor};
  loop.epochs = hyper.epochs;
  loop.accumulation = hyper.accumulation;
  loop.max_updates = hyper.max_updates;
  loop.seed = hyper.seed;
  loop.checkpoint_dir = checkpoint_dir;
  loop.metadata = extra_meta;
  PutConfig(encoder->config, &loop.metadata);
  PutConfig(decoder->config, &loop.metadata);
  loop.log = log;
  return RunTrainingLoop(loop);
}

Tensor ArLoss(const PreparedUtterance& utt, const EncoderParams& encoder,
              const ArDecoderParams& ar, const TrainHyper& hyper, bool training,
              Rng& rng) {
  Tensor h_a = EncodeAcoustic(TrainingFeatures(utt, hyper, training, rng), encoder,
                              training, rng);
  const std::vector<int>& ids = utt.tokens.ids;
  const int n = utt.tokens.true_length;
  std::vector<int> in(ids.begin(), ids.begin() + n - 1);
  std::vector<int> target(ids.begin() + 1, ids.begin() + n);
  return LabelSmoothedNll(ArForward(in, h_a, ar, training, rng), target,
                          hyper.label_smoothing);
}

LoopResult TrainAr(EncoderParams* encoder, ArDecoderParams* ar,
                   const Dataset& data, const TrainHyper& hyper,
                   const std::string& checkpoint_dir, std::ostream* log) {
  if (encoder->config.d_m != ar->config.d_m) {
    throw ConfigError("encoder d_m differs from the autoregressive decoder width");
  }
  CheckVocabulary(data, ar->config.vocab_size);
  TrainingLoop loop;
  loop.stage = "ar";
  encoder->RegisterAcoustic(&loop.trainable);
  ar->Register(&loop.trainable);
  loop.saved = loop.trainable;
  loop.batches = DurationBatches(data, hyper);
  loop.loss = [&data, encoder, ar, hyper](int item, Rng& rng) {
    return ArLoss(data.utterances[item], *encoder, *ar, hyper, true, rng);
  };
  loop.schedule = {encoder->config.d_m, hyper.warmup_steps, hyper.lr_factor};
  loop.epochs = hyper.epochs;
  loop.accumulation = hyper.accumulation;
  loop.max_updates = hyper.max_updates;
  loop.seed = hyper.seed;
  loop.checkpoint_dir = checkpoint_dir;
  PutConfig(encoder->config, &loop.metadata);
  PutConfig(ar->config, &loop.metadata);
  loop.log = log;
  return RunTrainingLoop(loop);
}

}  // namespace narasr
