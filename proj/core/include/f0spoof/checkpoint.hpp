// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_CHECKPOINT_HPP
#define F0SPOOF_CHECKPOINT_HPP

#include <filesystem>

#include "f0spoof/model.hpp"

namespace f0spoof {

// Binary checkpoint ("SRLA" magic): model config as JSON, then every named
// parameter and BN buffer with shape and raw f32 payload. Round trips are
// bit-exact.
void save_checkpoint(const std::filesystem::path& path, const SrlaRes2Net<float>& model);

// Rebuilds the model from the embedded config and restores all state.
SrlaRes2Net<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace f0spoof

#endif  // F0SPOOF_CHECKPOINT_HPP
