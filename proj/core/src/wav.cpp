// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "f0spoof/dataio.hpp"

namespace f0spoof {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t rd_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& os, uint32_t v) {
  uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                  static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& os, uint16_t v) {
  uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
  os.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path, int expected_rate) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("wav: cannot open '" + path.string() + "'");
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw DataError("wav: '" + path.string() + "' is not a RIFF/WAVE file");

  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const uint8_t* data_ptr = nullptr;
  uint32_t data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    uint32_t sz = rd_u32(buf.data() + pos + 4);
    if (pos + 8 + sz > buf.size()) sz = static_cast<uint32_t>(buf.size() - pos - 8);
    if (std::memcmp(id, "fmt ", 4) == 0 && sz >= 16) {
      const uint8_t* f = buf.data() + pos + 8;
      audio_format = rd_u16(f);
      channels = rd_u16(f + 2);
      rate = rd_u32(f + 4);
      bits = rd_u16(f + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = buf.data() + pos + 8;
      data_len = sz;
    }
    pos += 8 + sz + (sz & 1);
  }
  if (!data_ptr) throw DataError("wav: '" + path.string() + "' has no data chunk");
  if (channels != 1)
    throw DataError("wav: '" + path.string() + "' has " + std::to_string(channels) +
                    " channels; only mono is accepted");
  if (expected_rate > 0 && static_cast<int>(rate) != expected_rate)
    throw DataError("wav: '" + path.string() + "' sample rate " + std::to_string(rate) +
                    " Hz != required " + std::to_string(expected_rate) +
                    " Hz (no resampling is performed)");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (audio_format == 1 && bits == 16) {
    const size_t n = data_len / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t v = static_cast<int16_t>(rd_u16(data_ptr + 2 * i));
      w.samples[i] = v / 32768.0;
    }
  } else if (audio_format == 3 && bits == 32) {
    const size_t n = data_len / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      uint32_t raw = rd_u32(data_ptr + 4 * i);
      float f;
      std::memcpy(&f, &raw, 4);
      w.samples[i] = f;
    }
  } else {
    throw DataError("wav: '" + path.string() + "' has unsupported codec (format " +
                    std::to_string(audio_format) + ", " + std::to_string(bits) + " bit)");
  }
  return w;
}

void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("wav: cannot write '" + path.string() + "'");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 2;
  os.write("RIFF", 4);
  wr_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  wr_u32(os, 16);
  wr_u16(os, 1);  // PCM
  wr_u16(os, 1);  // mono
  wr_u32(os, static_cast<uint32_t>(w.sample_rate));
  wr_u32(os, static_cast<uint32_t>(w.sample_rate) * 2);
  wr_u16(os, 2);
  wr_u16(os, 16);
  os.write("data", 4);
  wr_u32(os, data_bytes);
  for (double s : w.samples) {
    double clamped = std::clamp(s, -1.0, 32767.0 / 32768.0);
    int16_t v = static_cast<int16_t>(std::lround(clamped * 32768.0));
    wr_u16(os, static_cast<uint16_t>(v));
  }
  if (!os) throw DataError("wav: short write to '" + path.string() + "'");
}

}  // namespace f0spoof
