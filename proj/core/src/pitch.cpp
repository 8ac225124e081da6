// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "f0spoof/pitch.hpp"

#include <algorithm>
#include <cmath>

namespace f0spoof {

F0Track estimate_f0(const Waveform& w, const PitchConfig& cfg) {
  cfg.validate();
  if (w.sample_rate <= 0) throw ConfigError("pitch: sample rate must be positive");
  const int sr = w.sample_rate;
  const int win = static_cast<int>(std::lround(cfg.frame_s * sr));
  const int hop = static_cast<int>(std::lround(cfg.hop_s * sr));
  if (static_cast<int>(w.samples.size()) < win)
    throw DataError("pitch: signal shorter than one analysis frame");

  const int tau_min = std::max(2, static_cast<int>(sr / cfg.max_hz));
  const int tau_max = std::min(win, static_cast<int>(std::ceil(sr / cfg.min_hz)));

  F0Track track;
  track.frame_hop_s = cfg.hop_s;

  std::vector<double> diff(static_cast<size_t>(tau_max) + 1, 0.0);
  std::vector<double> cmnd(static_cast<size_t>(tau_max) + 1, 1.0);

  const int64_t len = static_cast<int64_t>(w.samples.size());
  for (int64_t start = 0; start + win + tau_max <= len; start += hop) {
    const double* x = w.samples.data() + start;

    double energy = 0.0;
    for (int j = 0; j < win; ++j) energy += x[j] * x[j];
    if (std::sqrt(energy / win) < cfg.energy_floor) {
      track.f0_hz.push_back(0.0);
      track.voicing.push_back(false);
      continue;
    }

    for (int tau = 1; tau <= tau_max; ++tau) {
      double acc = 0.0;
      for (int j = 0; j < win; ++j) {
        double d = x[j] - x[j + tau];
        acc += d * d;
      }
      diff[tau] = acc;
    }
    double running = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
      running += diff[tau];
      cmnd[tau] = running > 0.0 ? diff[tau] * tau / running : 1.0;
    }

    // first dip under the threshold, then descend to its local minimum
    int tau_est = -1;
    for (int tau = tau_min; tau <= tau_max; ++tau) {
      if (cmnd[tau] < cfg.yin_threshold) {
        while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        tau_est = tau;
        break;
      }
    }
    if (tau_est < 0) {
      track.f0_hz.push_back(0.0);
      track.voicing.push_back(false);
      continue;
    }

    double tau_refined = tau_est;
    if (tau_est > tau_min && tau_est < tau_max) {
      const double a = cmnd[tau_est - 1], b = cmnd[tau_est], c = cmnd[tau_est + 1];
      const double denom = a - 2.0 * b + c;
      if (std::abs(denom) > 1e-12) tau_refined = tau_est + 0.5 * (a - c) / denom;
    }
    const double f0 = sr / tau_refined;
    if (f0 < cfg.min_hz || f0 > cfg.max_hz) {
      track.f0_hz.push_back(0.0);
      track.voicing.push_back(false);
    } else {
      track.f0_hz.push_back(f0);
      track.voicing.push_back(true);
    }
  }
  return track;
}

F0Histogram f0_histogram(const std::vector<F0Track>& tracks, double bin_width_hz) {
  if (bin_width_hz <= 0.0) throw ConfigError("f0_histogram: bin width must be positive");
  F0Histogram hist;
  hist.bin_width_hz = bin_width_hz;
  for (const auto& track : tracks)
    for (size_t i = 0; i < track.f0_hz.size(); ++i)
      if (track.voicing[i])
        ++hist.counts[static_cast<int64_t>(std::floor(track.f0_hz[i] / bin_width_hz))];
  return hist;
}

}  // namespace f0spoof
