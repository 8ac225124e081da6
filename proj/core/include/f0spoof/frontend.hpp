// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_FRONTEND_HPP
#define F0SPOOF_FRONTEND_HPP

#include <cstdint>
#include <vector>

#include "f0spoof/errors.hpp"
#include "f0spoof/tensor.hpp"

namespace f0spoof {

struct Waveform {
  std::vector<double> samples;  // [-1,1]
  int sample_rate = 16000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WindowKind { Blackman, Hann, Rectangular };

struct StftConfig {
  int window_length = 1728;
  int hop_length = 130;
  WindowKind window = WindowKind::Blackman;

  void validate() const {
    if (window_length <= 0 || hop_length <= 0 || hop_length > window_length)
      throw ConfigError("stft: require 0 < hop_length <= window_length");
  }
  int bins() const { return window_length / 2 + 1; }
};

// F x T row-major matrices of the real and imaginary STFT parts.
struct ComplexSpectrogram {
  int freq_bins = 0;
  int frames = 0;
  double bin_hz = 0.0;  // sample_rate / window_length
  std::vector<double> real;
  std::vector<double> imag;

  double re(int f, int t) const { return real[static_cast<size_t>(f) * frames + t]; }
  double im(int f, int t) const { return imag[static_cast<size_t>(f) * frames + t]; }
};

struct LogPowerSpectrum {
  int freq_bins = 0;
  int frames = 0;
  double bin_hz = 0.0;
  int band_low = 0;   // inclusive bin of the slice identity
  int band_high = 0;  // exclusive
  std::vector<double> values;  // F x T row-major

  double at(int f, int t) const { return values[static_cast<size_t>(f) * frames + t]; }
  double& at(int f, int t) { return values[static_cast<size_t>(f) * frames + t]; }
};

// DFT of windowed segments starting at t*hop; no center padding.
// T = 1 + floor((len - window) / hop).
ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg);

// values[f,t] = ln(max(|X[f,t]|, floor))
LogPowerSpectrum log_power_spectrum(const ComplexSpectrogram& s, double floor = 1e-10);

// Slice of the rows covering [low_hz, high_hz]: bins
// [floor(low/bin_hz), ceil(high/bin_hz)+1). Under the 16 kHz / 1728-sample
// configuration the default 0-400 Hz band is exactly the first 45 bins.
LogPowerSpectrum f0_subband(const LogPowerSpectrum& lps, double low_hz = 0.0,
                            double high_hz = 400.0);

// Truncate to target frames, or cyclically self-concatenate along time
// until long enough, then truncate.
LogPowerSpectrum fix_frames(const LogPowerSpectrum& lps, int target_frames = 600);

std::vector<double> make_window(WindowKind kind, int length);

// Whole front end: STFT -> log power -> F0 sub-band -> fixed frame count.
// Returns the [bins x target_frames] feature as f32 for caching/training.
Tensor<float> extract_feature(const Waveform& w, const StftConfig& cfg = {}, double low_hz = 0.0,
                              double high_hz = 400.0, int target_frames = 600);

}  // namespace f0spoof

#endif  // F0SPOOF_FRONTEND_HPP
