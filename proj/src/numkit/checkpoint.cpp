// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/numkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace flowdub::numkit {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_record(std::ostream& os, const std::string& name, const Array& a) {
  write_u32(os, uint32_t(name.size()));
  os.write(name.data(), std::streamsize(name.size()));
  write_u32(os, a.rank());
  for (uint32_t d : a.shape()) write_u32(os, d);
  os.write(reinterpret_cast<const char*>(a.data()), std::streamsize(a.numel() * sizeof(float)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const std::map<std::string, Array>& constants) {
  std::map<std::string, const Array*> records;
  std::map<std::string, Array> owned;
  for (const auto& name : store.names()) {
    records[name] = &store.value(name);
    records[name + "/m"] = &store.moment_m(name);
    records[name + "/v"] = &store.moment_v(name);
  }
  for (const auto& [name, a] : constants) {
    if (records.count(name)) {
      throw std::invalid_argument("checkpoint: constant collides with parameter " + name);
    }
    records[name] = &a;
  }
  owned.emplace("_step", Array({1}, {float(store.step())}));
  records["_step"] = &owned.at("_step");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path.string());
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  for (const auto& [name, a] : records) {
    write_record(os, name, *a);
  }
  if (!os) throw std::runtime_error("checkpoint: write failure: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  }
  const uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }

  std::map<std::string, Array> records;
  while (true) {
    uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), 4);
    if (is.eof()) break;
    if (!is) throw std::runtime_error("checkpoint: truncated record");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t rank = read_u32(is);
    if (rank < 1 || rank > 2) throw std::runtime_error("checkpoint: bad rank for " + name);
    std::vector<uint32_t> shape(rank);
    size_t n = 1;
    for (uint32_t& d : shape) {
      d = read_u32(is);
      n *= d;
    }
    std::vector<float> data(n);
    is.read(reinterpret_cast<char*>(data.data()), std::streamsize(n * sizeof(float)));
    if (!is) throw std::runtime_error("checkpoint: truncated payload for " + name);
    records.emplace(name, Array(std::move(shape), std::move(data)));
  }

  Checkpoint ckpt;
  uint64_t step = 0;
  if (auto it = records.find("_step"); it != records.end()) {
    step = uint64_t(it->second[0]);
    records.erase(it);
  }
  // Parameters are the names that came with both moments; anything else is
  // a constant.
  for (auto it = records.begin(); it != records.end();) {
    const std::string& name = it->first;
    if (name.size() > 2 && (name.ends_with("/m") || name.ends_with("/v"))) {
      ++it;
      continue;
    }
    auto m = records.find(name + "/m");
    auto v = records.find(name + "/v");
    if (m != records.end() && v != records.end()) {
      ckpt.store.insert_with_state(name, it->second, m->second, v->second);
    } else {
      ckpt.constants.emplace(name, it->second);
    }
    ++it;
  }
  ckpt.store.set_step(step);
  return ckpt;
}

}  // namespace flowdub::numkit
