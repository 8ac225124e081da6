// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "f0spoof/metrics.hpp"
#include "f0spoof/model.hpp"
#include "f0spoof/pitch.hpp"

namespace {

f0spoof::Waveform test_waveform(int samples = 27000) {
  f0spoof::Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i)
    w.samples[i] = 0.5 * std::sin(2.0 * M_PI * 180.0 * i / 16000.0) +
                   0.2 * std::sin(2.0 * M_PI * 360.0 * i / 16000.0);
  return w;
}

void BM_Stft(benchmark::State& state) {
  auto w = test_waveform();
  for (auto _ : state) benchmark::DoNotOptimize(f0spoof::stft(w, f0spoof::StftConfig{}));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_ExtractFeature(benchmark::State& state) {
  auto w = test_waveform();
  for (auto _ : state) benchmark::DoNotOptimize(f0spoof::extract_feature(w));
}
BENCHMARK(BM_ExtractFeature)->Unit(benchmark::kMillisecond);

void BM_EstimateF0(benchmark::State& state) {
  auto w = test_waveform();
  for (auto _ : state) benchmark::DoNotOptimize(f0spoof::estimate_f0(w));
}
BENCHMARK(BM_EstimateF0)->Unit(benchmark::kMillisecond);

void BM_Conv2d(benchmark::State& state) {
  std::mt19937 rng(1);
  auto x = f0spoof::make_leaf(f0spoof::Tensor<float>::uniform({1, 32, 45, 600}, rng, -1.f, 1.f));
  auto w = f0spoof::make_leaf(f0spoof::Tensor<float>::uniform({32, 32, 3, 3}, rng, -0.1f, 0.1f));
  auto b = f0spoof::make_leaf(f0spoof::Tensor<float>::uniform({32}, rng, -0.1f, 0.1f));
  f0spoof::ConvSpec spec;
  spec.in_channels = 32;
  spec.out_channels = 32;
  spec.kh = spec.kw = 3;
  spec.pad_h = spec.pad_w = 1;
  f0spoof::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(f0spoof::conv2d(x, w, b, spec));
}
BENCHMARK(BM_Conv2d)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  f0spoof::SrlaRes2Net<float> model(f0spoof::ModelConfig{}, 1);
  std::mt19937 rng(2);
  auto x = f0spoof::make_leaf(f0spoof::Tensor<float>::uniform({1, 1, 45, 600}, rng, -1.f, 1.f));
  f0spoof::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

void BM_ComputeEer(benchmark::State& state) {
  std::mt19937 rng(3);
  std::normal_distribution<double> bona(1.0, 1.0), spoof(-1.0, 1.0);
  std::vector<f0spoof::ScoreRecord> records;
  for (int i = 0; i < 5000; ++i) {
    records.push_back({"B" + std::to_string(i), "-", f0spoof::Key::Bonafide, bona(rng)});
    records.push_back({"S" + std::to_string(i), "A01", f0spoof::Key::Spoof, spoof(rng)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(f0spoof::compute_eer(records));
}
BENCHMARK(BM_ComputeEer)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
