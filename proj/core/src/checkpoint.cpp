// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cstring>
#include <fstream>

#include "f0spoof/checkpoint.hpp"

namespace f0spoof {

namespace {

constexpr char kMagic[4] = {'S', 'R', 'L', 'A'};
constexpr uint16_t kVersion = 1;

void wr_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void wr_str(std::ostream& os, const std::string& s) {
  wr_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void wr_tensor(std::ostream& os, const Tensor<float>& t) {
  wr_u32(os, static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) wr_u32(os, static_cast<uint32_t>(d));
  os.write(reinterpret_cast<const char*>(t.ptr()),
           static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

uint32_t rd_u32(std::istream& is, const std::string& path) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw DataError("checkpoint: '" + path + "' is truncated");
  return v;
}
std::string rd_str(std::istream& is, const std::string& path) {
  uint32_t n = rd_u32(is, path);
  if (n > (1u << 24)) throw DataError("checkpoint: '" + path + "' has an implausible string");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw DataError("checkpoint: '" + path + "' is truncated");
  return s;
}
Tensor<float> rd_tensor(std::istream& is, const std::string& path) {
  uint32_t ndim = rd_u32(is, path);
  if (ndim > 8) throw DataError("checkpoint: '" + path + "' has an implausible tensor rank");
  std::vector<int> shape(ndim);
  for (auto& d : shape) d = static_cast<int>(rd_u32(is, path));
  Tensor<float> t(shape);
  is.read(reinterpret_cast<char*>(t.ptr()),
          static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!is) throw DataError("checkpoint: '" + path + "' is truncated");
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SrlaRes2Net<float>& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot write '" + path.string() + "'");
  os.write(kMagic, 4);
  uint16_t ver = kVersion;
  os.write(reinterpret_cast<const char*>(&ver), 2);
  wr_str(os, model.config().to_json().dump());
  const auto& store = model.store();
  wr_u32(os, static_cast<uint32_t>(store.params.size()));
  for (size_t i = 0; i < store.params.size(); ++i) {
    wr_str(os, store.names[i]);
    wr_tensor(os, store.params[i]->value);
  }
  wr_u32(os, static_cast<uint32_t>(store.buffers.size()));
  for (size_t i = 0; i < store.buffers.size(); ++i) {
    wr_str(os, store.buffer_names[i]);
    wr_tensor(os, *store.buffers[i]);
  }
  if (!os) throw DataError("checkpoint: short write to '" + path.string() + "'");
}

SrlaRes2Net<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  char magic[4];
  uint16_t ver = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&ver), 2);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: '" + path.string() + "' has bad magic");
  if (ver != kVersion)
    throw DataError("checkpoint: '" + path.string() + "' has unsupported version " +
                    std::to_string(ver));
  ModelConfig cfg;
  try {
    cfg = ModelConfig::from_json(nlohmann::json::parse(rd_str(is, path.string())));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: '" + path.string() + "' has a corrupt config: " + e.what());
  }
  SrlaRes2Net<float> model(cfg);
  auto& store = model.store();

  uint32_t n_params = rd_u32(is, path.string());
  if (n_params != store.params.size())
    throw DataError("checkpoint: '" + path.string() + "' has " + std::to_string(n_params) +
                    " parameters; model expects " + std::to_string(store.params.size()));
  for (uint32_t i = 0; i < n_params; ++i) {
    std::string name = rd_str(is, path.string());
    Tensor<float> t = rd_tensor(is, path.string());
    if (name != store.names[i])
      throw DataError("checkpoint: parameter order mismatch at '" + name + "' (expected '" +
                      store.names[i] + "')");
    if (t.shape != store.params[i]->value.shape)
      throw DataError("checkpoint: shape mismatch for parameter '" + name + "'");
    store.params[i]->value = std::move(t);
  }

  uint32_t n_buffers = rd_u32(is, path.string());
  if (n_buffers != store.buffers.size())
    throw DataError("checkpoint: '" + path.string() + "' buffer count mismatch");
  for (uint32_t i = 0; i < n_buffers; ++i) {
    std::string name = rd_str(is, path.string());
    Tensor<float> t = rd_tensor(is, path.string());
    if (name != store.buffer_names[i])
      throw DataError("checkpoint: buffer order mismatch at '" + name + "'");
    if (t.shape != store.buffers[i]->shape)
      throw DataError("checkpoint: shape mismatch for buffer '" + name + "'");
    *store.buffers[i] = std::move(t);
  }
  return model;
}

}  // namespace f0spoof
