// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/condnet/condnet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "flowdub/numkit/rng.hpp"

namespace flowdub::condnet {

using numkit::Rng;
using numkit::mix_seed;

namespace {

Array uniform_init(Rng& rng, uint32_t rows, uint32_t cols) {
  Array w = Array::zeros({rows, cols});
  const double bound = 1.0 / std::sqrt(double(rows));
  numkit::fill_uniform(rng, w, -bound, bound);
  return w;
}

// y = x W + b computed outside the tape (fixed encoders).
Array affine_plain(const Array& x, const Array& w, const Array& b) {
  const uint32_t m = x.rows(), k = x.cols(), n = w.cols();
  if (k != w.rows()) throw std::invalid_argument("encoder affine: shape mismatch");
  Array out = Array::zeros({m, n});
  for (uint32_t i = 0; i < m; ++i) {
    for (uint32_t j = 0; j < n; ++j) {
      double acc = double(b[j]);
      for (uint32_t p = 0; p < k; ++p) acc += double(x.at(i, p)) * double(w.at(p, j));
      out.data()[size_t(i) * n + j] = float(acc);
    }
  }
  return out;
}

}  // namespace

int token_index(char token) {
  const char* v = kVocabulary;
  for (int i = 0; v[i] != '\0'; ++i) {
    if (v[i] == token) return i;
  }
  throw std::invalid_argument(std::string("unknown token '") + token + "'");
}

EncoderSet EncoderSet::init(uint64_t seed) {
  EncoderSet enc;
  {
    Rng rng(mix_seed(seed, "enc/video"));
    enc.video_w = uniform_init(rng, 4, kCondDim);
    enc.video_b = Array::zeros({kCondDim});
  }
  {
    Rng rng(mix_seed(seed, "enc/token"));
    enc.token_table = uniform_init(rng, uint32_t(std::strlen(kVocabulary)), kCondDim);
  }
  {
    Rng rng(mix_seed(seed, "enc/prompt"));
    enc.prompt_w = uniform_init(rng, dsp::kMelBins, kCondDim);
    enc.prompt_b = Array::zeros({kCondDim});
  }
  {
    Rng rng(mix_seed(seed, "enc/instr"));
    enc.instr_w = uniform_init(rng, kInstrBuckets, kInstrDim);
    enc.instr_b = Array::zeros({kInstrDim});
  }
  return enc;
}

std::map<std::string, Array> EncoderSet::to_map() const {
  return {
      {"enc/video/w", video_w},   {"enc/video/b", video_b},   {"enc/token/table", token_table},
      {"enc/prompt/w", prompt_w}, {"enc/prompt/b", prompt_b}, {"enc/instr/w", instr_w},
      {"enc/instr/b", instr_b},
  };
}

EncoderSet EncoderSet::from_map(const std::map<std::string, Array>& m) {
  auto get = [&](const char* name) {
    auto it = m.find(name);
    if (it == m.end()) throw std::runtime_error(std::string("encoder set missing ") + name);
    return it->second;
  };
  EncoderSet enc;
  enc.video_w = get("enc/video/w");
  enc.video_b = get("enc/video/b");
  enc.token_table = get("enc/token/table");
  enc.prompt_w = get("enc/prompt/w");
  enc.prompt_b = get("enc/prompt/b");
  enc.instr_w = get("enc/instr/w");
  enc.instr_b = get("enc/instr/b");
  return enc;
}

Array encode_video(const EncoderSet& enc, const Array& track, uint32_t target_frames) {
  if (track.rank() != 2 || track.rows() == 0) {
    throw std::invalid_argument("encode_video: empty track");
  }
  if (track.cols() != enc.video_w.rows()) {
    throw std::invalid_argument("encode_video: track dimension mismatch");
  }
  const uint32_t tv = track.rows(), k = track.cols();
  Array resampled = Array::zeros({target_frames, k});
  for (uint32_t f = 0; f < target_frames; ++f) {
    const double pos = target_frames > 1 ? double(f) * double(tv - 1) / double(target_frames - 1) : 0.0;
    const uint32_t lo = uint32_t(pos);
    const uint32_t hi = std::min(lo + 1, tv - 1);
    const double frac = pos - double(lo);
    for (uint32_t c = 0; c < k; ++c) {
      resampled.data()[size_t(f) * k + c] =
          float((1.0 - frac) * double(track.at(lo, c)) + frac * double(track.at(hi, c)));
    }
  }
  Array out = affine_plain(resampled, enc.video_w, enc.video_b);
  for (size_t i = 0; i < out.numel(); ++i) out[i] = float(std::tanh(double(out[i])));
  out.require_finite("encode_video");
  return out;
}

Array encode_text(const EncoderSet& enc, const std::string& transcript, uint32_t target_frames) {
  if (transcript.size() > target_frames) {
    throw std::invalid_argument("encode_text: transcript longer than target frames");
  }
  const uint32_t d = enc.token_table.cols();
  Array out = Array::zeros({target_frames, d});
  const int filler = token_index(kFiller);
  for (uint32_t f = 0; f < target_frames; ++f) {
    const int tok = f < transcript.size() ? token_index(transcript[f]) : filler;
    std::memcpy(out.data() + size_t(f) * d, enc.token_table.data() + size_t(tok) * d,
                d * sizeof(float));
  }
  return out;
}

Array encode_instruction(const EncoderSet& enc, const std::string& instruction) {
  std::string lowered;
  lowered.reserve(instruction.size());
  for (char c : instruction) lowered.push_back(char(std::tolower(static_cast<unsigned char>(c))));
  std::istringstream words(lowered);
  std::string word;
  std::vector<double> histogram(kInstrBuckets, 0.0);
  size_t count = 0;
  while (words >> word) {
    histogram[numkit::fnv1a64(word) % kInstrBuckets] += 1.0;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("encode_instruction: empty instruction");
  Array hist = Array::zeros({1, kInstrBuckets});
  for (uint32_t i = 0; i < kInstrBuckets; ++i) hist[i] = float(histogram[i] / double(count));
  Array out = affine_plain(hist, enc.instr_w, enc.instr_b);
  out.require_finite("encode_instruction");
  return out;
}

Array encode_prompt(const EncoderSet& enc, const dsp::Waveform& prompt) {
  if (prompt.samples.size() < dsp::kWin) {
    throw std::invalid_argument("encode_prompt: prompt shorter than one frame");
  }
  const dsp::MelSpec mel = dsp::mel_spectrogram(prompt);
  const uint32_t T = mel.frames.rows(), B = mel.frames.cols();
  Array pooled = Array::zeros({1, B});
  for (uint32_t b = 0; b < B; ++b) {
    double acc = 0.0;
    for (uint32_t t = 0; t < T; ++t) acc += double(mel.frames.at(t, b));
    pooled[b] = float(acc / double(T));
  }
  Array out = affine_plain(pooled, enc.prompt_w, enc.prompt_b);
  out.require_finite("encode_prompt");
  return out;
}

std::vector<float> resample_linear(const std::vector<float>& values, uint32_t target_len) {
  if (values.empty()) throw std::invalid_argument("resample_linear: empty input");
  if (values.size() == target_len) return values;
  std::vector<float> out(target_len);
  const uint32_t n = uint32_t(values.size());
  for (uint32_t f = 0; f < target_len; ++f) {
    const double pos = target_len > 1 ? double(f) * double(n - 1) / double(target_len - 1) : 0.0;
    const uint32_t lo = uint32_t(pos);
    const uint32_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - double(lo);
    out[f] = float((1.0 - frac) * double(values[lo]) + frac * double(values[hi]));
  }
  return out;
}

Condition inject_energy(Condition cond, const dsp::EnergyContour& e) {
  cond.energy = resample_linear(e.values, cond.frames);
  return cond;
}

std::vector<float> time_embedding(double t, uint32_t dim) {
  // Geometric frequencies from 1 to 1000 over half the channels.
  std::vector<float> emb(dim);
  const uint32_t half = dim / 2;
  for (uint32_t i = 0; i < half; ++i) {
    const double freq = std::pow(1000.0, double(i) / double(half > 1 ? half - 1 : 1));
    emb[2 * i] = float(std::sin(t * freq));
    emb[2 * i + 1] = float(std::cos(t * freq));
  }
  return emb;
}

Binder param_binder(const ParamStore& store) {
  auto cache = std::make_shared<std::map<std::string, Tape::Ref>>();
  const ParamStore* s = &store;
  return [cache, s](Tape& tape, const std::string& name) {
    auto it = cache->find(name);
    if (it != cache->end()) return it->second;
    Tape::Ref r = tape.param(name, s->value(name));
    cache->emplace(name, r);
    return r;
  };
}

Binder input_binder(const ParamStore& store) {
  auto cache = std::make_shared<std::map<std::string, Tape::Ref>>();
  const ParamStore* s = &store;
  return [cache, s](Tape& tape, const std::string& name) {
    auto it = cache->find(name);
    if (it != cache->end()) return it->second;
    Tape::Ref r = tape.input(s->value(name));
    cache->emplace(name, r);
    return r;
  };
}

std::vector<std::string> field_net_param_names(const FieldNetConfig& cfg, const std::string& prefix) {
  std::vector<std::string> names = {
      prefix + "/in_x/w",      prefix + "/in_x/b",      prefix + "/in_video/w",
      prefix + "/in_text/w",   prefix + "/in_prompt/w", prefix + "/in_energy/w",
      prefix + "/in_time/w",   prefix + "/null/video",  prefix + "/null/text",
      prefix + "/null/prompt", prefix + "/null/energy", prefix + "/out/w",
      prefix + "/out/b",
  };
  for (uint32_t k = 0; k < cfg.blocks; ++k) {
    const std::string block = prefix + "/block" + std::to_string(k);
    for (const char* part : {"/gate_a/w", "/gate_a/b", "/gate_b/w", "/gate_b/b", "/proj/w", "/proj/b"}) {
      names.push_back(block + part);
    }
  }
  return names;
}

ParamStore init_field_net(uint64_t seed, const FieldNetConfig& cfg, const std::string& prefix) {
  ParamStore store;
  auto mat = [&](const std::string& name, uint32_t rows, uint32_t cols) {
    Rng rng(mix_seed(seed, name));
    store.insert(name, uniform_init(rng, rows, cols));
  };
  auto bias = [&](const std::string& name, uint32_t n) { store.insert(name, Array::zeros({n})); };

  mat(prefix + "/in_x/w", cfg.mel_bins, cfg.hidden);
  bias(prefix + "/in_x/b", cfg.hidden);
  mat(prefix + "/in_video/w", cfg.cond_dim, cfg.hidden);
  mat(prefix + "/in_text/w", cfg.cond_dim, cfg.hidden);
  mat(prefix + "/in_prompt/w", cfg.cond_dim, cfg.hidden);
  mat(prefix + "/in_energy/w", 1, cfg.hidden);
  mat(prefix + "/in_time/w", cfg.time_dim, cfg.hidden);
  store.insert(prefix + "/null/video", Array::zeros({1, cfg.cond_dim}));
  store.insert(prefix + "/null/text", Array::zeros({1, cfg.cond_dim}));
  store.insert(prefix + "/null/prompt", Array::zeros({1, cfg.cond_dim}));
  store.insert(prefix + "/null/energy", Array::zeros({1, 1}));
  for (uint32_t k = 0; k < cfg.blocks; ++k) {
    const std::string block = prefix + "/block" + std::to_string(k);
    mat(block + "/gate_a/w", cfg.hidden, cfg.hidden);
    bias(block + "/gate_a/b", cfg.hidden);
    mat(block + "/gate_b/w", cfg.hidden, cfg.hidden);
    bias(block + "/gate_b/b", cfg.hidden);
    mat(block + "/proj/w", cfg.hidden, cfg.hidden);
    bias(block + "/proj/b", cfg.hidden);
  }
  mat(prefix + "/out/w", cfg.hidden, cfg.mel_bins);
  bias(prefix + "/out/b", cfg.mel_bins);
  return store;
}

Tape::Ref field_forward(Tape& tape, const Binder& bind, const FieldNetConfig& cfg,
                        const std::string& prefix, Tape::Ref x_t, double t, const Condition& cond) {
  const Array& x = tape.value(x_t);
  if (x.rank() != 2 || x.cols() != cfg.mel_bins) {
    throw std::invalid_argument("field_forward: x_t must be [T x mel_bins]");
  }
  const uint32_t T = x.rows();
  auto check_frames = [&](const Array& a, const char* what) {
    if (a.rows() != T) {
      throw std::invalid_argument(std::string("field_forward: frame-count mismatch for ") + what);
    }
  };
  if (cond.frames != T) {
    throw std::invalid_argument("field_forward: condition frame count differs from x_t");
  }

  Tape::Ref ones = tape.input(Array::full({T, 1}, 1.0f));
  auto source = [&](const std::optional<Array>& emb, const char* null_name, const char* what) {
    if (emb) {
      check_frames(*emb, what);
      return tape.input(*emb);
    }
    // Learned null embedding broadcast across frames.
    return tape.matmul(ones, bind(tape, prefix + null_name));
  };

  Tape::Ref h = tape.affine(x_t, bind(tape, prefix + "/in_x/w"), bind(tape, prefix + "/in_x/b"));
  h = tape.add(h, tape.matmul(source(cond.video_emb, "/null/video", "video"),
                              bind(tape, prefix + "/in_video/w")));
  h = tape.add(h, tape.matmul(source(cond.text_emb, "/null/text", "text"),
                              bind(tape, prefix + "/in_text/w")));

  Tape::Ref prompt_rows = [&] {
    if (cond.prompt_emb) {
      // Broadcast the single prompt vector over frames.
      return tape.matmul(ones, tape.input(*cond.prompt_emb));
    }
    return tape.matmul(ones, bind(tape, prefix + "/null/prompt"));
  }();
  h = tape.add(h, tape.matmul(prompt_rows, bind(tape, prefix + "/in_prompt/w")));

  Tape::Ref energy_rows = [&] {
    if (cond.energy) {
      if (cond.energy->size() != T) {
        throw std::invalid_argument("field_forward: frame-count mismatch for energy");
      }
      return tape.input(Array({T, 1}, *cond.energy));
    }
    return tape.matmul(ones, bind(tape, prefix + "/null/energy"));
  }();
  h = tape.add(h, tape.matmul(energy_rows, bind(tape, prefix + "/in_energy/w")));

  std::vector<float> temb = time_embedding(t, cfg.time_dim);
  std::vector<float> temb_rows(size_t(T) * cfg.time_dim);
  for (uint32_t f = 0; f < T; ++f) {
    std::memcpy(temb_rows.data() + size_t(f) * cfg.time_dim, temb.data(), cfg.time_dim * sizeof(float));
  }
  h = tape.add(h, tape.matmul(tape.input(Array({T, cfg.time_dim}, std::move(temb_rows))),
                              bind(tape, prefix + "/in_time/w")));

  for (uint32_t k = 0; k < cfg.blocks; ++k) {
    const std::string block = prefix + "/block" + std::to_string(k);
    Tape::Ref u = tape.tanh_(tape.affine(h, bind(tape, block + "/gate_a/w"), bind(tape, block + "/gate_a/b")));
    Tape::Ref v = tape.sigmoid_(tape.affine(h, bind(tape, block + "/gate_b/w"), bind(tape, block + "/gate_b/b")));
    Tape::Ref g = tape.mul(u, v);
    h = tape.add(h, tape.affine(g, bind(tape, block + "/proj/w"), bind(tape, block + "/proj/b")));
  }
  return tape.affine(h, bind(tape, prefix + "/out/w"), bind(tape, prefix + "/out/b"));
}

Array field_forward_value(const ParamStore& params, const FieldNetConfig& cfg,
                          const std::string& prefix, const Array& x_t, double t,
                          const Condition& cond) {
  Tape tape;
  Tape::Ref x = tape.input(x_t);
  Tape::Ref out = field_forward(tape, input_binder(params), cfg, prefix, x, t, cond);
  return tape.value(out);
}

}  // namespace flowdub::condnet
