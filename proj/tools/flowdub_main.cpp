// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
//
// flowdub: deterministic desk-scale audio/speech generation from video and
// text. Subcommands: data-gen, train, generate, eval, inspect.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowdub/errors.hpp"
#include "flowdub/metrics/metrics.hpp"
#include "flowdub/numkit/checkpoint.hpp"
#include "flowdub/pipeline/evaluate.hpp"
#include "flowdub/pipeline/generate.hpp"
#include "flowdub/pipeline/train.hpp"
#include "flowdub/synthdata/synthdata.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace flowdub;

namespace {

void write_run_header(const fs::path& dir, const std::string& command, uint64_t seed,
                      uint64_t cfg_hash) {
  json j = {{"command", command},
            {"seed", seed},
            {"config_hash", cfg_hash},
            {"version", pipeline::kVersion}};
  std::ofstream os(dir / "run_header.json", std::ios::trunc);
  os << j.dump(2) << "\n";
}

int cmd_data_gen(uint64_t seed, uint32_t clips, const fs::path& out) {
  fs::create_directories(out);
  synthdata::Manifest m = synthdata::make_corpus(seed, clips, out);
  write_run_header(out, "data-gen", seed, numkit::fnv1a64(std::to_string(clips)));
  std::printf("corpus: %zu clips (%zu train / %zu val / %zu test) under %s\n", m.clips.size(),
              m.split_entries("train").size(), m.split_entries("val").size(),
              m.split_entries("test").size(), out.string().c_str());
  return 0;
}

int cmd_train(int stage, const std::string& config_path, const fs::path& manifest,
              const fs::path& out, bool resume, uint64_t seed, bool seed_set) {
  pipeline::StageConfig cfg = config_path.empty() ? pipeline::default_stage_config(stage)
                                                  : pipeline::load_stage_config(config_path);
  if (!config_path.empty() && cfg.stage != stage) {
    throw UsageError("config file is for stage " + std::to_string(cfg.stage) +
                     " but --stage is " + std::to_string(stage));
  }
  if (seed_set) cfg.seed = seed;
  fs::create_directories(out);

  pipeline::TrainResult result = pipeline::train_stage(cfg, manifest, out, resume);
  write_run_header(out, "train --stage " + std::to_string(stage), cfg.seed,
                   pipeline::config_hash(cfg));
  {
    std::ofstream os(out / ("stage" + std::to_string(stage) + "_config.toml"), std::ios::trunc);
    os << pipeline::to_toml(cfg);
  }
  std::printf("stage %d: %u steps, loss %.4f -> %.4f\n", stage, result.steps_run,
              result.initial_loss, result.final_loss);
  if (result.heldout_accuracy >= 0.0) {
    std::printf("stage 3 held-out accuracy: %.1f%%\n", 100.0 * result.heldout_accuracy);
  }
  return 0;
}

int cmd_generate(const fs::path& bundle_dir, const std::string& instruction,
                 const std::string& video, const std::string& transcript,
                 const std::string& prompt, const fs::path& out, const pipeline::GenOptions& opts) {
  pipeline::ModelBundle bundle = pipeline::ModelBundle::load(bundle_dir);
  pipeline::GenerationRequest req;
  req.instruction = instruction;
  req.opts = opts;
  if (!video.empty()) req.video_track = synthdata::load_video_track(video);
  if (!transcript.empty()) req.transcript = transcript;
  if (!prompt.empty()) req.prompt = dsp::read_wav(prompt);

  pipeline::GenerationResult result = pipeline::generate(bundle, req);
  dsp::write_wav(out, result.wav);
  json audit = result.audit;
  audit["out_wav"] = out.string();
  std::ofstream os(out.string() + ".audit.json", std::ios::trunc);
  os << audit.dump(2) << "\n";
  std::printf("route %s -> %s (%.2fs)\n", mof::task_name(result.route), out.string().c_str(),
              result.wav.duration());
  return 0;
}

int cmd_eval(const fs::path& manifest_path, const fs::path& bundle_dir, const fs::path& report,
             const pipeline::EvalOptions& opts) {
  if (!fs::exists(manifest_path)) throw PreconditionError("missing manifest " + manifest_path.string());
  pipeline::ModelBundle bundle = pipeline::ModelBundle::load(bundle_dir);
  synthdata::Manifest manifest = synthdata::load_manifest(manifest_path);
  pipeline::EvalReport rep =
      pipeline::evaluate_bundle(bundle, manifest, manifest_path.parent_path(), opts);
  if (report.has_parent_path()) fs::create_directories(report.parent_path());
  pipeline::write_report(report, rep);
  write_run_header(report.has_parent_path() ? report.parent_path() : fs::path("."), "eval",
                   opts.seed, 0);
  std::printf("eval[%s]: %zu clips, mean MCD %.3f, MCD_SL %.3f, energy_corr %.3f\n",
              rep.mode.c_str(), rep.lines.size(), rep.mean_mcd, rep.mean_mcd_sl,
              rep.mean_energy_corr);
  return 0;
}

int cmd_inspect(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PreconditionError("cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  const std::string tag(magic, 4);
  if (tag == "FDCK") {
    numkit::Checkpoint ckpt = numkit::load_checkpoint(path);
    std::printf("checkpoint: %zu parameters, %zu constants, step %llu\n", ckpt.store.size(),
                ckpt.constants.size(), (unsigned long long)ckpt.store.step());
    for (const auto& name : ckpt.store.names()) {
      std::printf("  %-32s %s\n", name.c_str(), numkit::shape_str(ckpt.store.value(name)).c_str());
    }
    for (const auto& [name, a] : ckpt.constants) {
      std::printf("  %-32s %s (const)\n", name.c_str(), numkit::shape_str(a).c_str());
    }
  } else if (tag == "FDMS") {
    dsp::MelSpec m = dsp::load_melspec(path);
    std::printf("mel spectrogram: %u frames x %u bins\n", m.frames.rows(), m.frames.cols());
  } else if (tag == "FDVT") {
    numkit::Array t = synthdata::load_video_track(path);
    std::printf("video track: %u frames x %u dims (%.2fs @ 25fps)\n", t.rows(), t.cols(),
                double(t.rows()) / synthdata::kVideoFps);
  } else if (tag == "RIFF") {
    dsp::Waveform w = dsp::read_wav(path);
    double peak = 0.0;
    for (float s : w.samples) peak = std::max(peak, double(std::fabs(s)));
    std::printf("wav: %zu samples @ %u Hz (%.2fs), peak %.3f\n", w.samples.size(), w.sample_rate,
                w.duration(), peak);
  } else if (path.extension() == ".json") {
    synthdata::Manifest m = synthdata::load_manifest(path);
    std::printf("manifest: seed %llu, %zu clips (%zu/%zu/%zu train/val/test)\n",
                (unsigned long long)m.corpus_seed, m.clips.size(),
                m.split_entries("train").size(), m.split_entries("val").size(),
                m.split_entries("test").size());
  } else {
    throw UsageError("inspect: unrecognized file format " + path.string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowdub: unified audio-from-video / speech-from-text / speech-from-video generation"};
  app.require_subcommand(1);

  // data-gen
  auto* data_gen = app.add_subcommand("data-gen", "Generate the deterministic synthetic corpus");
  uint64_t dg_seed = 42;
  uint32_t dg_clips = 200;
  std::string dg_out;
  data_gen->add_option("--seed", dg_seed, "Corpus seed");
  data_gen->add_option("--clips", dg_clips, "Number of clips (>= 10)");
  data_gen->add_option("--out", dg_out, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Run one training stage");
  int tr_stage = 0;
  std::string tr_config, tr_data, tr_out;
  bool tr_resume = false;
  uint64_t tr_seed = 42;
  train->add_option("--stage", tr_stage, "Stage 1..4")->required()->check(CLI::Range(1, 4));
  train->add_option("--config", tr_config, "Stage config file (defaults are built in)");
  train->add_option("--data", tr_data, "Corpus manifest path")->required();
  train->add_option("--out", tr_out, "Bundle directory")->required();
  train->add_flag("--resume", tr_resume, "Continue from the stored step counter");
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "Training seed (overrides config)");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate audio for an instruction");
  std::string g_bundle, g_instruction, g_video, g_transcript, g_prompt, g_out;
  pipeline::GenOptions g_opts;
  gen->add_option("--bundle", g_bundle, "Bundle directory")->required();
  gen->add_option("--instruction", g_instruction, "Task instruction")->required();
  gen->add_option("--video", g_video, "Video track file (FDVT)");
  gen->add_option("--transcript", g_transcript, "Transcript tokens (A..H, _)");
  gen->add_option("--prompt", g_prompt, "Speaker prompt WAV");
  gen->add_option("--out", g_out, "Output WAV path")->required();
  gen->add_option("--seed", g_opts.seed, "Sampling seed");
  gen->add_option("--steps", g_opts.sample_steps, "ODE steps");
  gen->add_option("--guidance", g_opts.guidance_scale, "Classifier-free guidance scale");
  gen->add_option("--gl-iters", g_opts.gl_iters, "Griffin-Lim iterations");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a bundle on the test split");
  std::string e_manifest, e_bundle, e_out;
  pipeline::EvalOptions e_opts;
  eval->add_option("--manifest", e_manifest, "Corpus manifest path")->required();
  eval->add_option("--bundle", e_bundle, "Bundle directory")->required();
  eval->add_option("--out", e_out, "Report path (JSON lines)")->required();
  eval->add_option("--seed", e_opts.seed, "Evaluation seed");
  eval->add_option("--threads", e_opts.max_threads, "Worker cap (FLOWDUB_THREADS also caps)");
  eval->add_option("--steps", e_opts.gen.sample_steps, "ODE steps");
  eval->add_option("--gl-iters", e_opts.gen.gl_iters, "Griffin-Lim iterations");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Describe a flowdub artifact file");
  std::string i_path;
  inspect->add_option("path", i_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (data_gen->parsed()) return cmd_data_gen(dg_seed, dg_clips, dg_out);
    if (train->parsed()) {
      return cmd_train(tr_stage, tr_config, tr_data, tr_out, tr_resume, tr_seed,
                       tr_seed_opt->count() > 0);
    }
    if (gen->parsed()) {
      return cmd_generate(g_bundle, g_instruction, g_video, g_transcript, g_prompt, g_out, g_opts);
    }
    if (eval->parsed()) return cmd_eval(e_manifest, e_bundle, e_out, e_opts);
    if (inspect->parsed()) return cmd_inspect(i_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
