// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/synthdata/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "flowdub/condnet/condnet.hpp"
#include "flowdub/numkit/rng.hpp"

namespace flowdub::synthdata {

using numkit::Rng;
using numkit::mix_seed;
using json = nlohmann::ordered_json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRampSeconds = 0.008;  // crossfade at segment boundaries
constexpr int kHarmonics = 4;

// v2a templates: ambient/effects vocabulary, no speech words.
const std::array<const char*, 40> kV2aTemplates = {
    "generate sound effects for this video",
    "create ambient audio for the clip",
    "produce background sounds matching the footage",
    "add sound effects to this silent clip",
    "synthesize ambient noise for the scene",
    "make foley sounds for this video",
    "compose an effects track for the footage",
    "generate environmental audio from the video",
    "build an ambient soundscape for this footage",
    "produce audio effects that fit the motion",
    "create matching sound effects for the clip",
    "render ambient sound for this video",
    "make background noise for the scene",
    "produce a foley track for this clip",
    "generate the soundscape for this footage",
    "create audio atmosphere for the video",
    "add ambient effects to the clip",
    "synthesize sound effects from the visuals",
    "produce natural sounds for this footage",
    "make an effects layer for the video",
    "generate ambience for this silent footage",
    "create the background audio for this scene",
    "render sound effects matching the events",
    "add environmental noise to this video",
    "produce the ambient track for the clip",
    "synthesize a soundscape from the video",
    "make audio effects for the moving objects",
    "generate background ambience for the clip",
    "create foley audio for the silent scene",
    "render the noise bed for this footage",
    "produce sound design for this video",
    "add a sound effects layer to the footage",
    "make the scene sound natural with effects",
    "generate matching ambience from the visuals",
    "create sound textures for this clip",
    "synthesize the audio environment for the video",
    "produce effects audio for this footage",
    "render an atmosphere track for the scene",
    "add generated sounds to the silent video",
    "make ambient audio that follows the motion",
};

// v2s templates: dubbing vocabulary plus video words.
const std::array<const char*, 40> kV2sTemplates = {
    "dub this silent video with the script",
    "generate speech for the person in the video",
    "produce a voice track for this clip",
    "dub the clip using the provided lines",
    "create speech that matches the video",
    "voice this silent footage with the dialogue",
    "generate the character voice for this clip",
    "dub this footage with the given dialogue",
    "produce spoken lines synced to the video",
    "create a dubbed voice for the scene",
    "voice the script over this silent video",
    "generate speech aligned with the footage",
    "dub the silent scene using the transcript",
    "make the person in the video speak the lines",
    "produce dubbed speech for this clip",
    "create the voice over for this footage",
    "speak the dialogue in sync with the video",
    "dub the video using the reference voice",
    "generate synced speech from the clip and script",
    "voice this clip with matching dialogue",
    "produce a dub for this silent footage",
    "create spoken dialogue for the video scene",
    "dub these lines onto the footage",
    "make a voice track following the video timing",
    "generate dubbing audio for this clip",
    "produce the character dialogue for this video",
    "voice the transcript over the silent clip",
    "create dubbed lines matching the scene",
    "speak the script along with the footage",
    "dub the actor voice onto this video",
    "generate a matching voice for the silent scene",
    "produce video synced dialogue from the transcript",
    "create the dubbing for this clip",
    "voice the given lines over this footage",
    "dub speech onto the silent video",
    "make dialogue audio that follows the clip",
    "generate the voice performance for this video",
    "produce lip synced speech for the footage",
    "create a spoken track for this video scene",
    "dub this clip with the supplied transcript",
};

// tts templates: reading vocabulary, no video words.
const std::array<const char*, 40> kTtsTemplates = {
    "read this text aloud",
    "say the following sentence",
    "speak the given words",
    "convert the text to speech",
    "read the sentence out loud",
    "narrate the provided text",
    "say these words naturally",
    "speak this sentence for me",
    "turn the text into spoken audio",
    "read the words in a clear voice",
    "pronounce the given sentence",
    "say the text with natural intonation",
    "speak the written words aloud",
    "read out the provided sentence",
    "narrate these words",
    "convert this sentence into speech",
    "say the provided text",
    "speak the text in the reference voice",
    "read the passage aloud",
    "turn these words into audio",
    "pronounce the text clearly",
    "say this sentence out loud",
    "speak the given passage",
    "read the text in a natural voice",
    "narrate the sentence",
    "convert the words to spoken form",
    "say the written sentence",
    "speak these words for me",
    "read aloud the given words",
    "turn the sentence into spoken audio",
    "pronounce the provided words",
    "say the passage naturally",
    "speak the supplied text",
    "read this sentence to me",
    "narrate the given text",
    "convert the passage to speech",
    "say these words in the sample voice",
    "speak out the written text",
    "read the provided words aloud",
    "turn this text into a voice recording",
};

int tone_of(char token) {
  if (token == '_') return -1;
  if (token >= 'A' && token <= 'H') return token - 'A';
  throw std::invalid_argument(std::string("synthdata: unknown token '") + token + "'");
}

}  // namespace

double token_frequency(int tone_index) {
  if (tone_index < 0 || tone_index >= kNumTones) {
    throw std::invalid_argument("token_frequency: tone index out of range");
  }
  return 220.0 * std::pow(2.0, double(tone_index) / 4.0);
}

const std::array<std::array<double, 4>, kNumSpeakers>& speaker_timbres() {
  static const auto timbres = [] {
    std::array<std::array<double, 4>, kNumSpeakers> t = {{
        {1.00, 0.08, 0.04, 0.02},
        {0.12, 1.00, 0.10, 0.04},
        {0.06, 0.12, 1.00, 0.12},
        {0.03, 0.06, 0.15, 1.00},
    }};
    for (auto& w : t) {
      double sum = 0.0;
      for (double v : w) sum += v;
      for (double& v : w) v /= sum;
    }
    return t;
  }();
  return timbres;
}

SynClip make_clip(uint64_t seed, const ClipSpec& spec) {
  if (spec.duration < 0.5 || spec.duration > 2.0) {
    throw std::invalid_argument("make_clip: duration must be in [0.5, 2.0]");
  }
  if (spec.speaker < 0 || spec.speaker >= kNumSpeakers) {
    throw std::invalid_argument("make_clip: speaker out of range");
  }
  if (spec.transcript.empty()) {
    throw std::invalid_argument("make_clip: empty transcript");
  }

  const size_t n_segments = spec.transcript.size();
  std::vector<int> tones(n_segments);
  for (size_t i = 0; i < n_segments; ++i) tones[i] = tone_of(spec.transcript[i]);

  // Per-segment sustain levels; silence segments are level 0.
  Rng rng(seed);
  std::vector<double> levels(n_segments);
  for (size_t i = 0; i < n_segments; ++i) {
    const double draw = rng.uniform(0.4, 0.9);  // consumed even for silence: fixed draw order
    levels[i] = tones[i] >= 0 ? draw : 0.0;
  }

  const size_t n_samples = size_t(std::llround(spec.duration * dsp::kSampleRate));
  const double seg_seconds = spec.duration / double(n_segments);
  const auto& timbre = speaker_timbres()[size_t(spec.speaker)];

  auto level_at = [&](double t) -> double {
    const double clamped = std::clamp(t, 0.0, spec.duration);
    auto seg = std::min(size_t(clamped / seg_seconds), n_segments - 1);
    const double seg_start = double(seg) * seg_seconds;
    const double prev = seg == 0 ? 0.0 : levels[seg - 1];
    double a = levels[seg];
    if (clamped - seg_start < kRampSeconds) {
      const double f = (clamped - seg_start) / kRampSeconds;
      a = prev + (a - prev) * f;
    }
    if (spec.duration - clamped < kRampSeconds) {
      a *= (spec.duration - clamped) / kRampSeconds;  // release
    }
    return a;
  };
  auto segment_at = [&](double t) -> size_t {
    return std::min(size_t(std::clamp(t, 0.0, spec.duration) / seg_seconds), n_segments - 1);
  };

  SynClip clip;
  clip.transcript = spec.transcript;
  clip.speaker = spec.speaker;
  clip.duration = spec.duration;
  clip.wav.samples.resize(n_samples);
  clip.wav.sample_rate = dsp::kSampleRate;

  // Phase-continuous additive synthesis.
  std::array<double, kHarmonics> phase{};
  const double dt = 1.0 / double(dsp::kSampleRate);
  for (size_t n = 0; n < n_samples; ++n) {
    const double t = double(n) * dt;
    const int tone = tones[segment_at(t)];
    const double f0 = tone >= 0 ? token_frequency(tone) : 0.0;
    double s = 0.0;
    for (int h = 0; h < kHarmonics; ++h) {
      s += timbre[size_t(h)] * std::sin(phase[size_t(h)]);
      phase[size_t(h)] += 2.0 * kPi * f0 * double(h + 1) * dt;
    }
    clip.wav.samples[n] = float(level_at(t) * s);
  }
  clip.wav.validate();

  // Video control track at 25 fps, sampled at frame centers.
  const auto t_v = uint32_t(std::max<int64_t>(2, std::llround(spec.duration * kVideoFps)));
  clip.video_track = Array::zeros({t_v, 4});
  size_t prev_seg = SIZE_MAX;
  for (uint32_t v = 0; v < t_v; ++v) {
    const double t = (double(v) + 0.5) * spec.duration / double(t_v);
    const size_t seg = segment_at(t);
    const int tone = tones[seg];
    float* row = clip.video_track.data() + size_t(v) * 4;
    row[0] = float(level_at(t));
    row[1] = tone >= 0 ? float(double(tone + 1) / 8.0) : 0.0f;
    row[2] = float(double(spec.speaker) / 3.0);
    row[3] = seg != prev_seg ? 1.0f : 0.0f;
    prev_seg = seg;
  }
  return clip;
}

dsp::Waveform speaker_reference(int speaker) {
  ClipSpec spec;
  spec.duration = 0.6;
  spec.speaker = speaker;
  spec.transcript = "CF";
  // Fixed seed: references are stable across corpora.
  return make_clip(mix_seed(0xF10D0Bu, "speaker_ref", uint64_t(speaker)), spec).wav;
}

std::vector<const ManifestEntry*> Manifest::split_entries(const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : clips) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

Manifest make_corpus(uint64_t seed, uint32_t n_clips, const std::filesystem::path& out_dir) {
  if (n_clips < 10) throw std::invalid_argument("make_corpus: n_clips must be >= 10");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  std::filesystem::create_directories(out_dir / "refs", ec);
  if (!std::filesystem::is_directory(out_dir / "clips")) {
    throw std::runtime_error("make_corpus: cannot create output directory " + out_dir.string());
  }

  Manifest m;
  m.corpus_seed = seed;
  const uint32_t n_train = n_clips * 8 / 10;
  const uint32_t n_val = n_clips / 10;

  for (uint32_t id = 0; id < n_clips; ++id) {
    const uint64_t clip_seed = mix_seed(seed, "clip", id);
    Rng rng(clip_seed);
    ClipSpec spec;
    spec.duration = rng.uniform(0.5, 2.0);
    spec.speaker = int(id % kNumSpeakers);
    const auto n_tokens = size_t(2 + rng.below(5));  // 2..6
    spec.transcript.resize(n_tokens);
    for (auto& c : spec.transcript) c = condnet::kVocabulary[rng.below(9)];
    if (spec.transcript.find_first_not_of('_') == std::string::npos) {
      // Guarantee at least one tone so every clip carries signal.
      spec.transcript[0] = char('A' + char(rng.below(8)));
    }

    SynClip clip = make_clip(mix_seed(clip_seed, "synthesis"), spec);
    clip.id = id;

    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04u", id);
    ManifestEntry e;
    e.id = id;
    e.wav_path = std::string("clips/") + name + ".wav";
    e.track_path = std::string("clips/") + name + ".fdvt";
    e.transcript = spec.transcript;
    e.speaker = spec.speaker;
    e.duration = spec.duration;
    e.split = id < n_train ? "train" : (id < n_train + n_val ? "val" : "test");
    dsp::write_wav(out_dir / e.wav_path, clip.wav);
    save_video_track(out_dir / e.track_path, clip.video_track);
    m.clips.push_back(std::move(e));
  }

  for (int s = 0; s < kNumSpeakers; ++s) {
    m.speaker_refs[size_t(s)] = "refs/speaker" + std::to_string(s) + ".wav";
    dsp::write_wav(out_dir / m.speaker_refs[size_t(s)], speaker_reference(s));
  }

  InstructionSet instr = make_instruction_set(seed);
  save_instructions(out_dir / m.instructions_train, instr.train);
  save_instructions(out_dir / m.instructions_heldout, instr.heldout);

  save_manifest(out_dir / "manifest.json", m);
  return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  json j;
  j["corpus_seed"] = m.corpus_seed;
  j["sample_rate"] = dsp::kSampleRate;
  j["video_fps"] = kVideoFps;
  j["speaker_refs"] = m.speaker_refs;
  j["instructions_train"] = m.instructions_train;
  j["instructions_heldout"] = m.instructions_heldout;
  j["clips"] = json::array();
  for (const auto& e : m.clips) {
    j["clips"].push_back({{"id", e.id},
                          {"wav", e.wav_path},
                          {"track", e.track_path},
                          {"transcript", e.transcript},
                          {"speaker", e.speaker},
                          {"split", e.split},
                          {"duration", e.duration}});
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_manifest: cannot open " + path.string());
  os << j.dump(2) << "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_manifest: cannot open " + path.string());
  json j = json::parse(is);
  Manifest m;
  m.corpus_seed = j.at("corpus_seed").get<uint64_t>();
  m.speaker_refs = j.at("speaker_refs").get<std::array<std::string, kNumSpeakers>>();
  m.instructions_train = j.value("instructions_train", "instructions_train.jsonl");
  m.instructions_heldout = j.value("instructions_heldout", "instructions_heldout.jsonl");
  for (const auto& c : j.at("clips")) {
    ManifestEntry e;
    e.id = c.at("id").get<uint32_t>();
    e.wav_path = c.at("wav").get<std::string>();
    e.track_path = c.at("track").get<std::string>();
    e.transcript = c.at("transcript").get<std::string>();
    e.speaker = c.at("speaker").get<int>();
    e.split = c.at("split").get<std::string>();
    e.duration = c.at("duration").get<double>();
    m.clips.push_back(std::move(e));
  }
  return m;
}

void save_video_track(const std::filesystem::path& path, const Array& track) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_video_track: cannot open " + path.string());
  os.write("FDVT", 4);
  const uint32_t t = track.rows(), k = track.cols();
  os.write(reinterpret_cast<const char*>(&t), 4);
  os.write(reinterpret_cast<const char*>(&k), 4);
  os.write(reinterpret_cast<const char*>(track.data()), std::streamsize(track.numel() * 4));
  if (!os) throw std::runtime_error("save_video_track: write failure");
}

Array load_video_track(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_video_track: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FDVT", 4) != 0) throw std::runtime_error("load_video_track: bad magic");
  uint32_t t = 0, k = 0;
  is.read(reinterpret_cast<char*>(&t), 4);
  is.read(reinterpret_cast<char*>(&k), 4);
  std::vector<float> data(size_t(t) * k);
  is.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * 4));
  if (!is) throw std::runtime_error("load_video_track: truncated");
  return Array({t, k}, std::move(data));
}

InstructionSet make_instruction_set(uint64_t seed) {
  const std::array<const std::array<const char*, 40>*, 3> families = {&kV2aTemplates, &kV2sTemplates,
                                                                      &kTtsTemplates};
  InstructionSet out;
  for (int family = 0; family < 3; ++family) {
    std::vector<uint32_t> order(40);
    for (uint32_t i = 0; i < 40; ++i) order[i] = i;
    Rng rng(mix_seed(seed, "instructions", uint64_t(family)));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    const size_t held = family == 2 ? 6 : 7;  // 7 + 7 + 6 = 20 held out
    for (size_t i = 0; i < order.size(); ++i) {
      LabeledInstruction li{(*families[size_t(family)])[order[i]], family};
      if (i < order.size() - held) {
        out.train.push_back(std::move(li));
      } else {
        out.heldout.push_back(std::move(li));
      }
    }
  }
  return out;
}

const char* canonical_instruction(int label) {
  switch (label) {
    case 0:
      return kV2aTemplates[0];
    case 1:
      return kV2sTemplates[0];
    case 2:
      return kTtsTemplates[0];
  }
  throw std::invalid_argument("canonical_instruction: bad label");
}

void save_instructions(const std::filesystem::path& path, const std::vector<LabeledInstruction>& set) {
  static const char* names[3] = {"v2a", "v2s", "tts"};
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_instructions: cannot open " + path.string());
  for (const auto& li : set) {
    json j = {{"text", li.text}, {"label", names[size_t(li.label)]}};
    os << j.dump() << "\n";
  }
}

std::vector<LabeledInstruction> load_instructions(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_instructions: cannot open " + path.string());
  std::vector<LabeledInstruction> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    LabeledInstruction li;
    li.text = j.at("text").get<std::string>();
    const std::string label = j.at("label").get<std::string>();
    li.label = label == "v2a" ? 0 : (label == "v2s" ? 1 : 2);
    out.push_back(std::move(li));
  }
  return out;
}

}  // namespace flowdub::synthdata
