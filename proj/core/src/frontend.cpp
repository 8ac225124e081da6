// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "f0spoof/frontend.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace f0spoof {

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(static_cast<size_t>(length), 1.0);
  const double denom = length > 1 ? length - 1 : 1;
  switch (kind) {
    case WindowKind::Blackman:
      for (int n = 0; n < length; ++n)
        w[n] = 0.42 - 0.5 * std::cos(2.0 * M_PI * n / denom) +
               0.08 * std::cos(4.0 * M_PI * n / denom);
      break;
    case WindowKind::Hann:
      for (int n = 0; n < length; ++n) w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / denom);
      break;
    case WindowKind::Rectangular:
      break;
  }
  return w;
}

namespace {
// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex g_fftw_plan_mutex;
}  // namespace

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  if (w.sample_rate <= 0) throw ConfigError("stft: sample rate must be positive");
  const int64_t len = static_cast<int64_t>(w.samples.size());
  if (len < cfg.window_length)
    throw DataError("stft: signal of " + std::to_string(len) + " samples shorter than window " +
                    std::to_string(cfg.window_length));
  for (double s : w.samples)
    if (!std::isfinite(s)) throw DataError("stft: non-finite sample in input");

  const int F = cfg.bins();
  const int T = 1 + static_cast<int>((len - cfg.window_length) / cfg.hop_length);
  const auto win = make_window(cfg.window, cfg.window_length);

  ComplexSpectrogram out;
  out.freq_bins = F;
  out.frames = T;
  out.bin_hz = static_cast<double>(w.sample_rate) / cfg.window_length;
  out.real.assign(static_cast<size_t>(F) * T, 0.0);
  out.imag.assign(static_cast<size_t>(F) * T, 0.0);

  std::vector<double> frame(static_cast<size_t>(cfg.window_length));
  std::vector<fftw_complex> spec(static_cast<size_t>(F));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    plan = fftw_plan_dft_r2c_1d(cfg.window_length, frame.data(), spec.data(), FFTW_ESTIMATE);
  }
  if (!plan) throw NumericError("stft: failed to create FFT plan");

  for (int t = 0; t < T; ++t) {
    const int64_t start = static_cast<int64_t>(t) * cfg.hop_length;
    for (int n = 0; n < cfg.window_length; ++n) frame[n] = w.samples[start + n] * win[n];
    fftw_execute(plan);
    for (int f = 0; f < F; ++f) {
      out.real[static_cast<size_t>(f) * T + t] = spec[f][0];
      out.imag[static_cast<size_t>(f) * T + t] = spec[f][1];
    }
  }
  {
    std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

LogPowerSpectrum log_power_spectrum(const ComplexSpectrogram& s, double floor) {
  if (floor <= 0.0) throw ConfigError("log_power_spectrum: floor must be positive");
  if (s.real.size() != s.imag.size())
    throw DimensionError("log_power_spectrum: real/imag shape mismatch");
  LogPowerSpectrum out;
  out.freq_bins = s.freq_bins;
  out.frames = s.frames;
  out.bin_hz = s.bin_hz;
  out.band_low = 0;
  out.band_high = s.freq_bins;
  out.values.resize(s.real.size());
  for (size_t i = 0; i < s.real.size(); ++i) {
    double mag = std::hypot(s.real[i], s.imag[i]);
    out.values[i] = std::log(std::max(mag, floor));
  }
  return out;
}

LogPowerSpectrum f0_subband(const LogPowerSpectrum& lps, double low_hz, double high_hz) {
  if (lps.bin_hz <= 0.0) throw ConfigError("f0_subband: missing bin spacing");
  if (low_hz < 0.0 || high_hz <= low_hz) throw ConfigError("f0_subband: invalid band");
  const double nyquist = lps.bin_hz * (lps.freq_bins - 1);
  if (high_hz > nyquist + 1e-9)
    throw DataError("f0_subband: band upper edge " + std::to_string(high_hz) +
                    " Hz exceeds Nyquist " + std::to_string(nyquist) + " Hz");
  const int lo = static_cast<int>(std::floor(low_hz / lps.bin_hz));
  const int hi = std::min(lps.freq_bins, static_cast<int>(std::ceil(high_hz / lps.bin_hz)) + 1);
  LogPowerSpectrum out;
  out.freq_bins = hi - lo;
  out.frames = lps.frames;
  out.bin_hz = lps.bin_hz;
  out.band_low = lo;
  out.band_high = hi;
  out.values.resize(static_cast<size_t>(out.freq_bins) * out.frames);
  std::copy(lps.values.begin() + static_cast<size_t>(lo) * lps.frames,
            lps.values.begin() + static_cast<size_t>(hi) * lps.frames, out.values.begin());
  return out;
}

LogPowerSpectrum fix_frames(const LogPowerSpectrum& lps, int target_frames) {
  if (target_frames <= 0) throw ConfigError("fix_frames: target must be positive");
  if (lps.frames <= 0) throw DataError("fix_frames: empty input spectrogram");
  if (lps.frames == target_frames) return lps;
  LogPowerSpectrum out;
  out.freq_bins = lps.freq_bins;
  out.frames = target_frames;
  out.bin_hz = lps.bin_hz;
  out.band_low = lps.band_low;
  out.band_high = lps.band_high;
  out.values.resize(static_cast<size_t>(out.freq_bins) * target_frames);
  for (int f = 0; f < out.freq_bins; ++f)
    for (int t = 0; t < target_frames; ++t)
      out.at(f, t) = lps.at(f, t % lps.frames);
  return out;
}

Tensor<float> extract_feature(const Waveform& w, const StftConfig& cfg, double low_hz,
                              double high_hz, int target_frames) {
  auto lps = fix_frames(f0_subband(log_power_spectrum(stft(w, cfg)), low_hz, high_hz),
                        target_frames);
  Tensor<float> out({lps.freq_bins, lps.frames});
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = static_cast<float>(lps.values[i]);
  return out;
}

}  // namespace f0spoof
