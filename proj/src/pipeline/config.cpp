// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/pipeline/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "flowdub/numkit/rng.hpp"

namespace flowdub::pipeline {

void StageConfig::validate() const {
  if (stage < 1 || stage > 4) throw std::invalid_argument("StageConfig: stage must be 1..4");
  if (batch_size == 0) throw std::invalid_argument("StageConfig: batch_size must be > 0");
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw std::invalid_argument("StageConfig: drop_probability must be in [0,1]");
  }
  if (updates > 0) {
    numkit::Schedule s = sched;
    s.total_steps = updates;
    s.validate();
  }
}

StageConfig default_stage_config(int stage) {
  StageConfig cfg;
  cfg.stage = stage;
  switch (stage) {
    case 1:
      // V2A: Adam, lr 1e-4 -> 1e-6, 1k warmup, clip 0.2.
      cfg.updates = 2000;
      cfg.batch_size = 8;
      cfg.sched = {1e-4, 1e-6, 1000, 2000, 0.2};
      cfg.adam = {0.9, 0.95, 1e-8, 0.0};
      break;
    case 2:
      // TTS: AdamW, peak 7.5e-5, clip 1.0; warmup scaled to the desk run.
      cfg.updates = 2000;
      cfg.batch_size = 8;
      cfg.sched = {7.5e-5, 0.0, 200, 2000, 1.0};
      cfg.adam = {0.9, 0.95, 1e-8, 0.01};
      break;
    case 3:
      // MoF: batch 32 for 5k updates, Adam, lr 1e-4 -> 1e-6, 1k warmup.
      cfg.updates = 5000;
      cfg.batch_size = 32;
      cfg.sched = {1e-4, 1e-6, 1000, 5000, 1.0};
      cfg.adam = {0.9, 0.95, 1e-8, 0.0};
      break;
    case 4:
      // V2S tuning: lr 1e-5, TTS-style settings, 25% conditioning dropout.
      cfg.updates = 1000;
      cfg.batch_size = 8;
      cfg.sched = {1e-5, 0.0, 100, 1000, 1.0};
      cfg.adam = {0.9, 0.95, 1e-8, 0.0};
      cfg.drop_probability = 0.25;
      break;
    default:
      throw std::invalid_argument("default_stage_config: stage must be 1..4");
  }
  return cfg;
}

StageConfig parse_stage_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    kv[key] = value;
  }

  auto require = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument(std::string("config: missing key ") + key);
    return it->second;
  };

  StageConfig cfg = default_stage_config(std::stoi(require("stage")));
  auto num = [&](const char* key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : std::stod(it->second);
  };
  cfg.updates = uint32_t(num("updates", cfg.updates));
  cfg.batch_size = uint32_t(num("batch_size", cfg.batch_size));
  cfg.seed = uint64_t(num("seed", double(cfg.seed)));
  cfg.sched.peak_lr = num("peak_lr", cfg.sched.peak_lr);
  cfg.sched.final_lr = num("final_lr", cfg.sched.final_lr);
  cfg.sched.warmup_steps = uint32_t(num("warmup_steps", cfg.sched.warmup_steps));
  cfg.sched.total_steps = cfg.updates;
  cfg.sched.clip_norm = num("clip_norm", cfg.sched.clip_norm);
  cfg.adam.beta1 = num("adam_beta1", cfg.adam.beta1);
  cfg.adam.beta2 = num("adam_beta2", cfg.adam.beta2);
  cfg.adam.eps = num("adam_eps", cfg.adam.eps);
  cfg.adam.weight_decay = num("weight_decay", cfg.adam.weight_decay);
  cfg.drop_probability = num("drop_probability", cfg.drop_probability);
  cfg.validate();
  return cfg;
}

StageConfig load_stage_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_stage_config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_stage_config(buf.str());
}

std::string to_toml(const StageConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "# flowdub stage " << cfg.stage << " training config\n";
  os << "stage = " << cfg.stage << "\n";
  os << "updates = " << cfg.updates << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "peak_lr = " << cfg.sched.peak_lr << "\n";
  os << "final_lr = " << cfg.sched.final_lr << "\n";
  os << "warmup_steps = " << cfg.sched.warmup_steps << "\n";
  os << "clip_norm = " << cfg.sched.clip_norm << "\n";
  os << "adam_beta1 = " << cfg.adam.beta1 << "\n";
  os << "adam_beta2 = " << cfg.adam.beta2 << "\n";
  os << "adam_eps = " << cfg.adam.eps << "\n";
  os << "weight_decay = " << cfg.adam.weight_decay << "\n";
  os << "drop_probability = " << cfg.drop_probability << "\n";
  return os.str();
}

uint64_t config_hash(const StageConfig& cfg) { return numkit::fnv1a64(to_toml(cfg)); }

numkit::Array mel_to_latent(const numkit::Array& logmel) {
  numkit::Array out = logmel;
  for (size_t i = 0; i < out.numel(); ++i) {
    out[i] = float((double(out[i]) - kLatentMean) / kLatentScale);
  }
  return out;
}

numkit::Array latent_to_mel(const numkit::Array& latent) {
  numkit::Array out = latent;
  for (size_t i = 0; i < out.numel(); ++i) {
    out[i] = float(double(out[i]) * kLatentScale + kLatentMean);
  }
  return out;
}

}  // namespace flowdub::pipeline
