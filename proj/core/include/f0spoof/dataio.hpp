// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_DATAIO_HPP
#define F0SPOOF_DATAIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "f0spoof/frontend.hpp"
#include "f0spoof/tensor.hpp"

namespace f0spoof {

// --------------------------------------------------------------------------
// WAV (RIFF PCM, mono). 16-bit PCM or 32-bit float; no resampling.
// --------------------------------------------------------------------------

Waveform read_wav(const std::filesystem::path& path, int expected_rate = 16000);
void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w);

// --------------------------------------------------------------------------
// ASVspoof-style protocol files: `SPEAKER UTT_ID - SYSTEM_ID KEY`
// --------------------------------------------------------------------------

enum class Key { Bonafide, Spoof };

inline std::string key_name(Key k) { return k == Key::Bonafide ? "bonafide" : "spoof"; }

struct ProtocolEntry {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id;  // "-" for bonafide
  Key key = Key::Bonafide;
};

struct Protocol {
  std::vector<ProtocolEntry> entries;
  int64_t bonafide_count = 0;
  int64_t spoof_count = 0;
};

Protocol parse_protocol(const std::filesystem::path& path);
void write_protocol(const std::filesystem::path& path, const std::vector<ProtocolEntry>& entries);

// --------------------------------------------------------------------------
// Per-utterance feature cache: magic "F0SB", version u16, F u32, T u32,
// row-major little-endian f32.
// --------------------------------------------------------------------------

void write_feature_cache(const std::filesystem::path& path, const Tensor<float>& feature);
Tensor<float> read_feature_cache(const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Synthetic desk-scale dataset. Bonafide items carry a moving F0 contour
// (vibrato + declination); spoof items a flat one. Broadband content is
// matched so only the sub-400 Hz structure separates the classes.
// --------------------------------------------------------------------------

struct SynthSpec {
  int n_bonafide = 10;
  int n_spoof = 10;
  double duration_s = 1.6875;  // 27000 samples at 16 kHz
  uint64_t seed = 1;
  std::string split = "train";  // enters the per-utterance RNG stream
  std::string prefix = "SY";

  void validate() const {
    if (n_bonafide < 1 || n_spoof < 1) throw ConfigError("synth: counts must be >= 1");
    if (duration_s < 0.5) throw ConfigError("synth: duration must be >= 0.5 s");
  }
};

// Renders one utterance; exposed so tests can probe contours directly.
Waveform synth_utterance(const SynthSpec& spec, int index, bool bonafide);

// Writes out_dir/wav/*.wav and out_dir/protocol.txt; returns the entries.
std::vector<ProtocolEntry> generate_synthetic_dataset(const SynthSpec& spec,
                                                      const std::filesystem::path& out_dir);

}  // namespace f0spoof

#endif  // F0SPOOF_DATAIO_HPP
