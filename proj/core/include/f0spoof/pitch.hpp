// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_PITCH_HPP
#define F0SPOOF_PITCH_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "f0spoof/frontend.hpp"

namespace f0spoof {

struct F0Track {
  std::vector<double> f0_hz;    // 0 where unvoiced
  std::vector<bool> voicing;
  double frame_hop_s = 0.010;

  int voiced_count() const {
    int n = 0;
    for (bool v : voicing) n += v ? 1 : 0;
    return n;
  }
};

struct PitchConfig {
  double frame_s = 0.025;
  double hop_s = 0.010;
  double min_hz = 50.0;
  double max_hz = 600.0;
  double yin_threshold = 0.15;  // cumulative-mean-normalized difference
  double energy_floor = 1e-6;   // RMS below this is unvoiced outright

  void validate() const {
    if (frame_s <= 0 || hop_s <= 0) throw ConfigError("pitch: frame/hop must be positive");
    if (min_hz >= max_hz) throw ConfigError("pitch: inverted search range");
    if (min_hz <= 0) throw ConfigError("pitch: search range must be positive");
  }
};

// YIN-style cumulative-mean-normalized autocorrelation with parabolic
// interpolation around the selected lag. Deterministic for fixed input.
F0Track estimate_f0(const Waveform& w, const PitchConfig& cfg = {});

// Histogram of voiced-frame F0 values; key i covers [i*w, (i+1)*w) Hz.
struct F0Histogram {
  double bin_width_hz = 10.0;
  std::map<int64_t, uint64_t> counts;

  uint64_t total() const {
    uint64_t n = 0;
    for (const auto& [k, v] : counts) n += v;
    return n;
  }
};

F0Histogram f0_histogram(const std::vector<F0Track>& tracks, double bin_width_hz = 10.0);

}  // namespace f0spoof

#endif  // F0SPOOF_PITCH_HPP
