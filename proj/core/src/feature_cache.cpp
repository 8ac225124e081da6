// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cstring>
#include <fstream>

#include "f0spoof/dataio.hpp"

namespace f0spoof {

namespace {
constexpr char kMagic[4] = {'F', '0', 'S', 'B'};
constexpr uint16_t kVersion = 1;
}  // namespace

void write_feature_cache(const std::filesystem::path& path, const Tensor<float>& feature) {
  if (feature.ndim() != 2) throw DimensionError("feature cache: expected F x T matrix");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("feature cache: cannot write '" + path.string() + "'");
  os.write(kMagic, 4);
  uint16_t ver = kVersion;
  uint32_t f = static_cast<uint32_t>(feature.dim(0));
  uint32_t t = static_cast<uint32_t>(feature.dim(1));
  os.write(reinterpret_cast<const char*>(&ver), 2);
  os.write(reinterpret_cast<const char*>(&f), 4);
  os.write(reinterpret_cast<const char*>(&t), 4);
  os.write(reinterpret_cast<const char*>(feature.ptr()),
           static_cast<std::streamsize>(feature.numel() * sizeof(float)));
  if (!os) throw DataError("feature cache: short write to '" + path.string() + "'");
}

Tensor<float> read_feature_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("feature cache: cannot open '" + path.string() + "'");
  char magic[4];
  uint16_t ver = 0;
  uint32_t f = 0, t = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&ver), 2);
  is.read(reinterpret_cast<char*>(&f), 4);
  is.read(reinterpret_cast<char*>(&t), 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("feature cache: '" + path.string() + "' has bad magic");
  if (ver != kVersion)
    throw DataError("feature cache: '" + path.string() + "' has unsupported version " +
                    std::to_string(ver));
  Tensor<float> out({static_cast<int>(f), static_cast<int>(t)});
  is.read(reinterpret_cast<char*>(out.ptr()),
          static_cast<std::streamsize>(out.numel() * sizeof(float)));
  if (!is) throw DataError("feature cache: '" + path.string() + "' is truncated");
  return out;
}

}  // namespace f0spoof
