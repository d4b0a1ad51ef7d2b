// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/pipeline/bundle.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "flowdub/numkit/rng.hpp"
#include "flowdub/pipeline/config.hpp"

namespace flowdub::pipeline {

using json = nlohmann::ordered_json;

ModelBundle ModelBundle::create(const std::filesystem::path& dir, uint64_t seed) {
  std::filesystem::create_directories(dir);
  ModelBundle b;
  b.dir = dir;
  b.seed = seed;
  b.encoders = condnet::EncoderSet::init(numkit::mix_seed(seed, "encoders"));
  numkit::save_checkpoint(dir / kEncodersFile, numkit::ParamStore{}, b.encoders.to_map());
  b.save_meta();
  return b;
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
  std::ifstream is(dir / kMetaFile);
  if (!is) {
    throw std::runtime_error("bundle: missing " + (dir / kMetaFile).string());
  }
  json meta = json::parse(is);
  ModelBundle b;
  b.dir = dir;
  b.seed = meta.at("seed").get<uint64_t>();
  for (const auto& [key, rec] : meta.at("stages").items()) {
    StageRecord r;
    r.completed = rec.at("completed").get<bool>();
    r.updates = rec.at("updates").get<uint32_t>();
    r.config_hash = rec.at("config_hash").get<uint64_t>();
    b.stages[std::stoi(key)] = r;
  }
  b.encoders = condnet::EncoderSet::from_map(
      numkit::load_checkpoint(dir / kEncodersFile).constants);
  if (std::filesystem::exists(dir / kV2aFile)) {
    b.v2a = numkit::load_checkpoint(dir / kV2aFile).store;
  }
  if (std::filesystem::exists(dir / kTtsFile)) {
    b.tts = numkit::load_checkpoint(dir / kTtsFile).store;
  }
  if (std::filesystem::exists(dir / kMofFile)) {
    b.mof_gate = numkit::load_checkpoint(dir / kMofFile).store;
  }
  return b;
}

void ModelBundle::save_meta() const {
  json meta;
  meta["version"] = kVersion;
  meta["seed"] = seed;
  meta["stages"] = json::object();
  for (const auto& [stage, rec] : stages) {
    meta["stages"][std::to_string(stage)] = {{"completed", rec.completed},
                                             {"updates", rec.updates},
                                             {"config_hash", rec.config_hash}};
  }
  std::ofstream os(dir / kMetaFile, std::ios::trunc);
  if (!os) throw std::runtime_error("bundle: cannot write meta.json");
  os << meta.dump(2) << "\n";
}

void ModelBundle::save_module(int stage) const {
  switch (stage) {
    case 1:
      numkit::save_checkpoint(dir / kV2aFile, *v2a);
      break;
    case 2:
    case 4:
      numkit::save_checkpoint(dir / kTtsFile, *tts);
      break;
    case 3:
      numkit::save_checkpoint(dir / kMofFile, *mof_gate);
      break;
    default:
      throw std::invalid_argument("bundle: bad stage");
  }
}

}  // namespace flowdub::pipeline
