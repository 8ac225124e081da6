// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <cmath>
#include <random>

#include "f0spoof/dataio.hpp"

namespace f0spoof {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t utterance_seed(const SynthSpec& spec, int index, bool bonafide) {
  uint64_t h = spec.seed;
  for (char c : spec.split) h = splitmix64(h ^ static_cast<uint64_t>(c));
  h = splitmix64(h ^ static_cast<uint64_t>(index));
  return splitmix64(h ^ (bonafide ? 0x0b0afdULL : 0x5900fULL));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // explicit mapping keeps the stream layout independent of libstdc++
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) / 9007199254740992.0);
}

char split_initial(const std::string& split) {
  if (split == "train") return 'T';
  if (split == "dev") return 'D';
  if (split == "eval") return 'E';
  return split.empty() ? 'X' : static_cast<char>(std::toupper(split[0]));
}

}  // namespace

Waveform synth_utterance(const SynthSpec& spec, int index, bool bonafide) {
  spec.validate();
  const int sr = 16000;
  const int64_t n = static_cast<int64_t>(std::llround(spec.duration_s * sr));
  std::mt19937_64 rng(utterance_seed(spec, index, bonafide));

  const double base_f0 = uniform(rng, 100.0, 300.0);
  const double vib_amp = bonafide ? uniform(rng, 5.0, 15.0) : 0.0;
  const double vib_rate = bonafide ? uniform(rng, 4.0, 7.0) : 0.0;
  const double vib_phase = bonafide ? uniform(rng, 0.0, 2.0 * M_PI) : 0.0;
  const double declination = bonafide ? uniform(rng, 10.0, 30.0) : 0.0;  // Hz per second
  const double am_rate = uniform(rng, 1.5, 3.0);
  const double am_phase = uniform(rng, 0.0, 2.0 * M_PI);

  const int harmonics = 24;
  std::vector<double> harm_phase(harmonics);
  for (int h = 0; h < harmonics; ++h) harm_phase[h] = uniform(rng, 0.0, 2.0 * M_PI);

  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(static_cast<size_t>(n));

  double phase = uniform(rng, 0.0, 2.0 * M_PI);
  double peak = 0.0;
  std::vector<double> noise(static_cast<size_t>(n));
  for (auto& v : noise) {
    // Box-Muller from the explicit uniform stream
    double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-12);
    double u2 = uniform(rng, 0.0, 1.0);
    v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  for (int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double f0 = base_f0 - declination * t + vib_amp * std::sin(2.0 * M_PI * vib_rate * t + vib_phase);
    f0 = std::max(f0, 80.0);
    phase += 2.0 * M_PI * f0 / sr;
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      if (h * f0 > 7000.0) break;
      s += std::sin(h * phase + harm_phase[h - 1]) / h;
    }
    const double am = 0.8 + 0.2 * std::sin(2.0 * M_PI * am_rate * t + am_phase);
    double v = am * s + 0.02 * noise[i];
    w.samples[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0.0) {
    const double g = 0.7 / peak;
    for (auto& v : w.samples) v *= g;
  }
  return w;
}

std::vector<ProtocolEntry> generate_synthetic_dataset(const SynthSpec& spec,
                                                      const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw DataError("synth: cannot create output directory '" + out_dir.string() + "'");

  const char split = split_initial(spec.split);
  std::vector<ProtocolEntry> entries;
  auto emit = [&](int index, bool bonafide) {
    char utt[64];
    std::snprintf(utt, sizeof(utt), "%s_%c_%07d", spec.prefix.c_str(), split,
                  bonafide ? index : spec.n_bonafide + index);
    ProtocolEntry e;
    e.speaker_id = spec.prefix + "_SPK01";
    e.utt_id = utt;
    e.system_id = bonafide ? "-" : "A01";
    e.key = bonafide ? Key::Bonafide : Key::Spoof;
    write_wav_pcm16(out_dir / "wav" / (e.utt_id + ".wav"),
                    synth_utterance(spec, index, bonafide));
    entries.push_back(std::move(e));
  };
  for (int i = 0; i < spec.n_bonafide; ++i) emit(i, true);
  for (int i = 0; i < spec.n_spoof; ++i) emit(i, false);
  write_protocol(out_dir / "protocol.txt", entries);
  return entries;
}

}  // namespace f0spoof
