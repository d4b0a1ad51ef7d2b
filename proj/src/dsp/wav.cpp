// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/dsp/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace flowdub::dsp {

namespace {

void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::ostream& os, uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); }

uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint16_t get_u16(std::istream& is) {
  uint16_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 2);
  return v;
}

}  // namespace

void Waveform::validate() const {
  for (float s : samples) {
    if (!std::isfinite(s) || std::fabs(s) > 1.0f + 1e-6f) {
      throw std::runtime_error("Waveform: sample out of range or non-finite");
    }
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  w.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_wav: cannot open " + path.string());
  const uint32_t data_bytes = uint32_t(w.samples.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, w.sample_rate);
  put_u32(os, w.sample_rate * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (float s : w.samples) {
    double c = s;
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    auto q = int16_t(std::lrint(c * 32767.0));
    os.write(reinterpret_cast<const char*>(&q), 2);
  }
  if (!os) throw std::runtime_error("write_wav: write failure " + path.string());
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_wav: cannot open " + path.string());
  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("read_wav: not RIFF");
  get_u32(is);
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("read_wav: not WAVE");

  Waveform w;
  bool have_fmt = false;
  while (is.read(tag, 4)) {
    uint32_t chunk = get_u32(is);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      uint16_t fmt = get_u16(is);
      uint16_t channels = get_u16(is);
      w.sample_rate = get_u32(is);
      get_u32(is);
      get_u16(is);
      uint16_t bits = get_u16(is);
      if (fmt != 1 || channels != 1 || bits != 16) {
        throw std::runtime_error("read_wav: only PCM16 mono supported");
      }
      if (chunk > 16) is.seekg(chunk - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("read_wav: data before fmt");
      const size_t n = chunk / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t q = 0;
        is.read(reinterpret_cast<char*>(&q), 2);
        w.samples[i] = float(double(q) / 32767.0);
      }
      if (!is) throw std::runtime_error("read_wav: truncated data");
      return w;
    } else {
      is.seekg(chunk + (chunk & 1), std::ios::cur);
    }
  }
  throw std::runtime_error("read_wav: missing data chunk");
}

}  // namespace flowdub::dsp
