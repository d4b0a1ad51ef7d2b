// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/pipeline/evaluate.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "flowdub/errors.hpp"
#include "flowdub/metrics/metrics.hpp"
#include "flowdub/numkit/rng.hpp"
#include "flowdub/pipeline/generate.hpp"

namespace flowdub::pipeline {

using json = nlohmann::ordered_json;

namespace {

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : int(std::min(8u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FLOWDUB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

ClipScore score_clip(const ModelBundle& bundle, const synthdata::Manifest& manifest,
                     const std::filesystem::path& corpus_dir, const synthdata::ManifestEntry& entry,
                     const EvalOptions& opts, bool v2s_mode) {
  GenerationRequest req;
  req.opts = opts.gen;
  req.opts.seed = numkit::mix_seed(opts.seed, "eval/clip", entry.id);
  req.transcript = entry.transcript;
  req.prompt = dsp::read_wav(corpus_dir / manifest.speaker_refs[size_t(entry.speaker)]);
  if (v2s_mode) {
    req.instruction = synthdata::canonical_instruction(1);  // v2s
    req.video_track = synthdata::load_video_track(corpus_dir / entry.track_path);
  } else {
    req.instruction = synthdata::canonical_instruction(2);  // tts
  }
  const GenerationResult gen = generate(bundle, req);

  const dsp::Waveform gt = dsp::read_wav(corpus_dir / entry.wav_path);
  const dsp::MelSpec mel_ref = dsp::mel_spectrogram(gt);
  const dsp::MelSpec mel_gen = dsp::mel_spectrogram(gen.wav);
  const metrics::CepstraTrack cep_ref = metrics::mfcc(mel_ref);
  const metrics::CepstraTrack cep_gen = metrics::mfcc(mel_gen);

  ClipScore score;
  score.id = entry.id;
  score.mcd = metrics::mcd(cep_ref, cep_gen);
  score.mcd_sl = metrics::mcd_sl(cep_ref, cep_gen);
  score.energy_corr = metrics::energy_corr(dsp::energy_contour(gt, dsp::kWin, dsp::kHop),
                                           dsp::energy_contour(gen.wav, dsp::kWin, dsp::kHop));
  score.frames_ref = mel_ref.frame_count();
  score.frames_gen = mel_gen.frame_count();
  return score;
}

}  // namespace

EvalReport evaluate_bundle(const ModelBundle& bundle, const synthdata::Manifest& manifest,
                           const std::filesystem::path& corpus_dir, const EvalOptions& opts) {
  const auto entries = manifest.split_entries("test");
  if (entries.empty()) throw PreconditionError("manifest has no test split");

  EvalReport report;
  const bool v2s_mode = bundle.stage_done(4);
  report.mode = v2s_mode ? "v2s" : "tts-zeroshot";
  report.lines.resize(entries.size());

  const int threads = resolve_threads(opts.max_threads);
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= entries.size()) break;
          report.lines[i] = score_clip(bundle, manifest, corpus_dir, *entries[i], opts, v2s_mode);
        }
      } catch (...) {
        errors[size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto& s : report.lines) {
    report.mean_mcd += s.mcd;
    report.mean_mcd_sl += s.mcd_sl;
    report.mean_energy_corr += s.energy_corr;
  }
  const double n = double(report.lines.size());
  report.mean_mcd /= n;
  report.mean_mcd_sl /= n;
  report.mean_energy_corr /= n;
  return report;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_report: cannot open " + path.string());
  for (const auto& s : report.lines) {
    json j = {{"id", s.id},
              {"mcd", s.mcd},
              {"mcd_sl", s.mcd_sl},
              {"energy_corr", s.energy_corr},
              {"frames_ref", s.frames_ref},
              {"frames_gen", s.frames_gen}};
    os << j.dump() << "\n";
  }
  json summary = {{"mode", report.mode},
                  {"clips", report.lines.size()},
                  {"mean_mcd", report.mean_mcd},
                  {"mean_mcd_sl", report.mean_mcd_sl},
                  {"mean_energy_corr", report.mean_energy_corr}};
  std::ofstream ss(path.string() + ".summary.json", std::ios::trunc);
  ss << summary.dump(2) << "\n";
}

}  // namespace flowdub::pipeline
