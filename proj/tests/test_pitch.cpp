// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "f0spoof/pitch.hpp"

using namespace f0spoof;

namespace {

Waveform sawtooth(double hz, double seconds, int sr = 16000) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(static_cast<size_t>(seconds * sr));
  for (size_t i = 0; i < w.samples.size(); ++i) {
    double ph = std::fmod(hz * i / sr, 1.0);
    w.samples[i] = 0.6 * (2.0 * ph - 1.0);
  }
  return w;
}

}  // namespace

TEST_CASE("220 Hz sawtooth is recovered within 2 Hz on >= 95% of voiced frames") {
  auto track = estimate_f0(sawtooth(220.0, 2.0));
  REQUIRE(track.voiced_count() > 50);
  int close = 0;
  for (size_t i = 0; i < track.f0_hz.size(); ++i)
    if (track.voicing[i] && std::abs(track.f0_hz[i] - 220.0) <= 2.0) ++close;
  CHECK(static_cast<double>(close) / track.voiced_count() >= 0.95);
}

TEST_CASE("frequency sweep tracks the instantaneous F0") {
  // slow linear chirp 150 -> 250 Hz over 2 s
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(32000);
  double phase = 0.0;
  for (size_t i = 0; i < w.samples.size(); ++i) {
    double hz = 150.0 + 100.0 * (static_cast<double>(i) / w.samples.size());
    phase += 2.0 * M_PI * hz / 16000.0;
    w.samples[i] = 0.5 * std::sin(phase) + 0.25 * std::sin(2 * phase) + 0.12 * std::sin(3 * phase);
  }
  auto track = estimate_f0(w);
  int ok = 0, voiced = 0;
  for (size_t i = 0; i < track.f0_hz.size(); ++i) {
    if (!track.voicing[i]) continue;
    ++voiced;
    double t = static_cast<double>(i) * track.frame_hop_s;
    double expected = 150.0 + 100.0 * (t / 2.0);
    if (std::abs(track.f0_hz[i] - expected) <= 5.0) ++ok;
  }
  REQUIRE(voiced > 50);
  CHECK(static_cast<double>(ok) / voiced >= 0.9);
}

TEST_CASE("white noise is mostly unvoiced") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(32000);
  for (auto& s : w.samples) s = dist(rng);
  auto track = estimate_f0(w);
  int unvoiced = 0;
  for (bool v : track.voicing) unvoiced += v ? 0 : 1;
  CHECK(static_cast<double>(unvoiced) / track.voicing.size() >= 0.9);
}

TEST_CASE("silence is entirely unvoiced with F0 zero") {
  Waveform w{std::vector<double>(16000, 0.0), 16000};
  auto track = estimate_f0(w);
  CHECK(track.voiced_count() == 0);
  for (double f : track.f0_hz) CHECK(f == 0.0);
}

TEST_CASE("estimator respects the configured search range") {
  PitchConfig cfg;
  cfg.min_hz = 300.0;  // 220 Hz is now out of range
  auto track = estimate_f0(sawtooth(220.0, 1.0), cfg);
  for (size_t i = 0; i < track.f0_hz.size(); ++i)
    if (track.voicing[i]) CHECK(track.f0_hz[i] >= 300.0 - 1e-9);
}

TEST_CASE("histogram counts voiced frames into fixed-width bins") {
  auto t220 = estimate_f0(sawtooth(220.0, 1.0));
  auto t110 = estimate_f0(sawtooth(110.0, 1.0));
  auto h = f0_histogram({t220, t110}, 10.0);
  CHECK(h.total() == static_cast<uint64_t>(t220.voiced_count() + t110.voiced_count()));
  // nearly all mass in the two true bins (22: [220,230), 11: [110,120))
  uint64_t in_bins = 0;
  for (int64_t b : {21, 22, 10, 11})
    if (h.counts.count(b)) in_bins += h.counts.at(b);
  CHECK(static_cast<double>(in_bins) / h.total() >= 0.95);
}

TEST_CASE("histogram of no tracks is empty") {
  auto h = f0_histogram({}, 10.0);
  CHECK(h.total() == 0);
}
