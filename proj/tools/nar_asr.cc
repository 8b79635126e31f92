// tools/nar_asr.cc

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

// Command-line driver: corpus generation, statistics, the training stages,
// decoding, scoring and the NAR/AR speed benchmark.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "narasr/errors.h"
#include "narasr/pipeline.h"

namespace {

using namespace narasr;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  long seed = -1;
  std::string out;
  std::string data;
};

void AddCommon(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("--config", o->config, "key = value configuration file");
  cmd->add_option("--set", o->sets, "override one config key (key=value); repeatable");
  cmd->add_option("--seed", o->seed, "random seed (overrides the config)");
  cmd->add_option("--out", o->out, "output root for stage directories");
  cmd->add_option("--data", o->data, "corpus directory made by gen-data");
}

RunConfig LoadRunConfig(const CommonOptions& o) {
  std::vector<std::string> overrides = o.sets;
  if (o.seed >= 0) overrides.push_back("seed=" + std::to_string(o.seed));
  if (!o.out.empty()) overrides.push_back("out=" + o.out);
  if (!o.data.empty()) overrides.push_back("data=" + o.data);
  return RunConfig::Load(o.config, overrides);
}

void ReportStage(const StageOutcome& s) {
  std::cout << "updates\t" << s.result.updates << "\n"
            << "first_loss\t" << s.result.first_loss << "\n"
            << "last_loss\t" << s.result.last_loss << "\n";
  if (!s.result.checkpoints.empty())
    std::cout << "checkpoint\t" << s.result.checkpoints.back() << "\n";
}

int DefaultThreads() {
  const char* env = std::getenv("NAR_ASR_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    return std::max(1, std::stoi(env));
  } catch (const std::exception&) {
    throw ConfigError(std::string("NAR_ASR_THREADS is not an integer: ") + env);
  }
}

int Run(int argc, char** argv) {
  CLI::App app{"Non-autoregressive speech recognition with a masked-LM decoder"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "BLAS worker threads (default NAR_ASR_THREADS or 1; 1 is deterministic)");

  // gen-data
  std::string spec_path, gen_out;
  long gen_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic tone corpus");
  gen->add_option("--spec", spec_path, "synthetic task spec (key = value)");
  gen->add_option("--seed", gen_seed, "corpus seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  // stats
  std::string stats_manifest;
  CLI::App* stats = app.add_subcommand("stats", "print corpus statistics");
  stats->add_option("--manifest", stats_manifest, "manifest (JSON lines)")->required();

  // training stages
  CommonOptions lm_opts, pre_opts, ft_opts, ar_opts;
  CLI::App* train_lm = app.add_subcommand("train-lm", "masked-LM pretraining of the decoder");
  AddCommon(train_lm, &lm_opts);
  CLI::App* pretrain =
      app.add_subcommand("pretrain-encoder", "encoder pretraining against the tied embeddings");
  AddCommon(pretrain, &pre_opts);
  std::string mode_text = "full";
  CLI::App* finetune = app.add_subcommand("finetune", "joint fine-tuning of encoder and decoder");
  AddCommon(finetune, &ft_opts);
  finetune->add_option("--mode", mode_text,
                       "full | no-encoder-pretrain | no-decoder-pretrain | scratch");
  CLI::App* train_ar = app.add_subcommand("train-ar", "train the autoregressive baseline");
  AddCommon(train_ar, &ar_opts);

  // decode / eval / bench
  CommonOptions dec_opts, eval_opts, bench_opts;
  std::string checkpoint, ar_checkpoint, manifest_path, vocab_path, result_out;
  std::string baseline_text = "nar";
  int average_last = 1;
  auto add_decoding = [&](CLI::App* cmd, CommonOptions* o) {
    AddCommon(cmd, o);
    cmd->add_option("--checkpoint", checkpoint, "checkpoint file or stage directory")
        ->required();
    cmd->add_option("--manifest", manifest_path, "manifest to decode")->required();
    cmd->add_option("--vocab", vocab_path, "vocabulary (default: from the config)");
    cmd->add_option("--average-last", average_last, "average the last K epoch checkpoints");
    cmd->add_option("--baseline", baseline_text, "nar | ar");
  };
  CLI::App* decode = app.add_subcommand("decode", "write hypotheses");
  add_decoding(decode, &dec_opts);
  decode->add_option("--hyp", result_out, "hypothesis file (id<TAB>text)")->required();
  CLI::App* eval = app.add_subcommand("eval", "score a manifest");
  add_decoding(eval, &eval_opts);
  eval->add_option("--report", result_out, "report directory")->required();
  CLI::App* bench = app.add_subcommand("bench", "time NAR against AR decoding");
  add_decoding(bench, &bench_opts);
  bench->add_option("--ar-checkpoint", ar_checkpoint, "AR checkpoint file or directory")
      ->required();
  bench->add_option("--report", result_out, "bench report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  SetComputeThreads(threads > 0 ? threads : DefaultThreads());

  if (gen->parsed()) {
    SyntheticTaskSpec spec;
    if (!spec_path.empty()) spec = SyntheticTaskSpec::FromConfig(KeyValueConfig::ParseFile(spec_path));
    spec.Validate();
    GenerateSyntheticCorpus(spec, static_cast<uint64_t>(gen_seed), gen_out);
    std::cout << "wrote corpus to " << gen_out << "\n";
    return 0;
  }
  if (stats->parsed()) {
    std::cout << FormatCorpusStats(ComputeCorpusStats(ReadManifest(stats_manifest)));
    return 0;
  }
  if (train_lm->parsed()) {
    ReportStage(RunTrainLm(LoadRunConfig(lm_opts)));
    return 0;
  }
  if (pretrain->parsed()) {
    ReportStage(RunPretrainEncoder(LoadRunConfig(pre_opts)));
    return 0;
  }
  if (finetune->parsed()) {
    const FinetuneMode mode = ParseFinetuneMode(mode_text);
    ReportStage(RunFinetune(LoadRunConfig(ft_opts), mode));
    return 0;
  }
  if (train_ar->parsed()) {
    ReportStage(RunTrainAr(LoadRunConfig(ar_opts)));
    return 0;
  }

  const CommonOptions& o = decode->parsed() ? dec_opts : eval->parsed() ? eval_opts : bench_opts;
  const RunConfig cfg = LoadRunConfig(o);
  const Vocabulary vocab = Vocabulary::Read(vocab_path.empty() ? cfg.vocab_path : vocab_path);
  const Manifest manifest = ReadManifest(manifest_path);
  const Checkpoint ckpt = ResolveCheckpoint(checkpoint, average_last);
  if (bench->parsed()) {
    const BenchReport r =
        RunBench(ckpt, ResolveCheckpoint(ar_checkpoint, 1), manifest, vocab, cfg.ar_max_len);
    WriteBenchReport(r, result_out);
    std::cout << "rtf_nar\t" << r.rtf_nar << "\nrtf_ar\t" << r.rtf_ar << "\nratio\t"
              << r.ratio << "\n";
    return 0;
  }
  const ScoreReport report = EvaluateCheckpoint(ckpt, ParseBaseline(baseline_text), manifest,
                                                vocab, cfg.ar_max_len);
  if (decode->parsed()) {
    if (fs::path(result_out).has_parent_path())
      fs::create_directories(fs::path(result_out).parent_path());
    WriteHypotheses(report, result_out);
  } else {
    WriteReport(report, result_out);
  }
  std::printf("cer\t%.4f\nutterances\t%d\nfailures\t%d\nrtf\t%.6f\n", report.cer,
              report.utterances, report.failures, report.rtf);
  return report.failures == report.utterances ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const narasr::NumericFault& e) {
    std::cerr << "nar_asr: numeric fault: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "nar_asr: " << e.what() << "\n";
    return 2;
  }
}
