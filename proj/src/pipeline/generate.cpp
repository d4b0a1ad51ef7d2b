// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/pipeline/generate.hpp"

#include <cmath>

#include "flowdub/errors.hpp"
#include "flowdub/flowmatch/flowmatch.hpp"
#include "flowdub/numkit/rng.hpp"

namespace flowdub::pipeline {

using condnet::Condition;
using numkit::Array;
using numkit::mix_seed;

namespace {

uint32_t mel_frames_for_duration(double seconds) {
  const auto samples = size_t(std::llround(seconds * dsp::kSampleRate));
  if (samples < dsp::kWin) {
    throw UsageError("requested duration shorter than one analysis window");
  }
  return dsp::frame_count(samples, dsp::kWin, dsp::kHop);
}

// One flow-matching sampling pass through a field net.
Array sample_latent(const numkit::ParamStore& params, const std::string& prefix,
                    const condnet::FieldNetConfig& net_cfg, const Condition& cond,
                    const GenOptions& opts, uint64_t stream, uint32_t* forward_counter) {
  const Condition uncond = Condition::all_null(cond.frames);
  auto field = [&](const Array& x, double t, bool conditional) {
    ++(*forward_counter);
    return condnet::field_forward_value(params, net_cfg, prefix, x, t,
                                        conditional ? cond : uncond);
  };
  Array x0 = Array::zeros({cond.frames, net_cfg.mel_bins});
  numkit::Rng rng(stream);
  numkit::fill_normal(rng, x0);
  flowmatch::GuidanceSpec guidance;
  guidance.scale = opts.guidance_scale;
  return flowmatch::ode_sample(field, x0, opts.sample_steps, flowmatch::OdeMethod::euler, guidance);
}

}  // namespace

GenerationResult generate(const ModelBundle& bundle, const GenerationRequest& request) {
  if (!bundle.mof_gate) throw PreconditionError("missing stage-3 checkpoint");
  const condnet::FieldNetConfig net_cfg = bundle.field_config();

  GenerationResult result;
  const Array instr_emb = condnet::encode_instruction(bundle.encoders, request.instruction);
  result.gate = mof::gate_probs(*bundle.mof_gate, instr_emb);
  ++result.counters.gate_evals;
  result.route = result.gate.route;

  const char* route_name = mof::task_name(result.route);
  auto require_input = [&](bool present, const char* what) {
    if (!present) {
      throw UsageError(std::string(what) + " required for route " + route_name);
    }
  };

  std::optional<dsp::MelSpec> v2a_mel;
  std::optional<dsp::Waveform> v2a_wav;

  // V2A pass (the v2a route's output, and the v2s route's energy source).
  if (result.route == mof::Task::v2a || result.route == mof::Task::v2s) {
    require_input(request.video_track.has_value(), "video");
    if (!bundle.v2a) throw PreconditionError("missing stage-1 checkpoint");
    const double duration = double(request.video_track->rows()) / condnet::kVideoFps;
    const uint32_t frames = mel_frames_for_duration(duration);
    Condition cond;
    cond.frames = frames;
    cond.video_emb = condnet::encode_video(bundle.encoders, *request.video_track, frames);
    const Array latent =
        sample_latent(*bundle.v2a, "v2a", net_cfg, cond, request.opts,
                      mix_seed(request.opts.seed, "gen/v2a"), &result.counters.v2a_forwards);
    dsp::MelSpec mel;
    mel.frames = latent_to_mel(latent);
    auto gl = dsp::griffin_lim(mel, request.opts.gl_iters);
    v2a_mel = std::move(mel);
    v2a_wav = std::move(gl.wav);
  }

  if (result.route == mof::Task::v2a) {
    result.mel = std::move(*v2a_mel);
    result.wav = std::move(*v2a_wav);
  } else {
    // Speech-producing routes: MoF fuses the audio knowledge, TTS renders.
    require_input(request.transcript.has_value(), "transcript");
    if (!bundle.tts) throw PreconditionError("missing stage-2 checkpoint");

    std::optional<std::vector<float>> v2a_feature;
    if (v2a_wav) {
      v2a_feature = dsp::energy_contour(*v2a_wav, dsp::kWin, dsp::kHop).values;
    }
    const mof::AudioKnowledge knowledge =
        mof::route(result.gate, v2a_feature ? &*v2a_feature : nullptr, mof::RouteMode::hard);
    ++result.counters.mof_fusions;

    uint32_t frames = 0;
    if (result.route == mof::Task::v2s) {
      // Dub timing comes from the video.
      frames = v2a_mel->frame_count();
    } else {
      const double duration = double(request.transcript->size()) * request.opts.token_seconds;
      frames = mel_frames_for_duration(duration);
    }
    if (request.transcript->size() > frames) {
      throw UsageError("transcript longer than the target frame count");
    }

    Condition cond;
    cond.frames = frames;
    cond.text_emb = condnet::encode_text(bundle.encoders, *request.transcript, frames);
    if (request.prompt) {
      cond.prompt_emb = condnet::encode_prompt(bundle.encoders, *request.prompt);
    }
    if (!knowledge.is_empty) {
      dsp::EnergyContour contour;
      contour.values = knowledge.feature;
      cond = condnet::inject_energy(std::move(cond), contour);
    }

    const Array latent =
        sample_latent(*bundle.tts, "tts", net_cfg, cond, request.opts,
                      mix_seed(request.opts.seed, "gen/tts"), &result.counters.tts_forwards);
    result.mel.frames = latent_to_mel(latent);
    auto gl = dsp::griffin_lim(result.mel, request.opts.gl_iters);
    result.wav = std::move(gl.wav);
  }

  nlohmann::ordered_json audit;
  audit["instruction"] = request.instruction;
  audit["probs"] = result.gate.probs;
  audit["route"] = route_name;
  std::vector<std::string> activated;
  if (result.counters.v2a_forwards > 0) activated.emplace_back("v2a");
  if (result.counters.tts_forwards > 0) activated.emplace_back("tts");
  if (result.counters.mof_fusions > 0) activated.emplace_back("mof");
  audit["activated_modules"] = activated;
  audit["counters"] = {{"gate_evals", result.counters.gate_evals},
                       {"mof_fusions", result.counters.mof_fusions},
                       {"v2a_forwards", result.counters.v2a_forwards},
                       {"tts_forwards", result.counters.tts_forwards}};
  audit["seed"] = request.opts.seed;
  audit["sample_steps"] = request.opts.sample_steps;
  audit["guidance_scale"] = request.opts.guidance_scale;
  audit["version"] = kVersion;
  result.audit = std::move(audit);
  return result;
}

}  // namespace flowdub::pipeline
