// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "flowdub/numkit/optim.hpp"

namespace flowdub::numkit {

// Checkpoint file layout (little-endian):
//   magic "FDCK", version u32,
//   then repeated records: name-length u32, name utf-8, rank u32,
//   shape u32s, f32 payload.
// Optimizer moments are stored as "<name>/m" and "<name>/v"; the step
// counter lives under "_step". Records are written in sorted name order so
// identical state produces byte-identical files. Extra constant arrays
// (no moments) may ride along, e.g. frozen encoder weights.
struct Checkpoint {
  ParamStore store;
  std::map<std::string, Array> constants;
};

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const std::map<std::string, Array>& constants = {});

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flowdub::numkit
