// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_TRAIN_HPP
#define F0SPOOF_TRAIN_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "f0spoof/adam.hpp"
#include "f0spoof/dataio.hpp"
#include "f0spoof/metrics.hpp"
#include "f0spoof/model.hpp"

namespace f0spoof {

// In-memory split: one cached [F x T] feature per protocol entry.
// Labels: 0 = bonafide, 1 = spoof.
struct Dataset {
  std::vector<Tensor<float>> features;
  std::vector<int> labels;
  std::vector<std::string> utt_ids;
  std::vector<std::string> attack_ids;

  size_t size() const { return features.size(); }
};

// Joins a protocol with per-utterance caches `<feature_dir>/<utt_id>.f0sb`.
Dataset load_dataset(const std::filesystem::path& protocol_path,
                     const std::filesystem::path& feature_dir);

struct EpochLog {
  double mean_loss = 0.0;
  double dev_eer = 0.0;
};

struct TrainResult {
  int best_epoch = 0;  // 1-based
  double best_dev_eer = 1.0;
  std::vector<EpochLog> epochs;
};

// SphereFace-style margin annealing: lambda(iter) = max(min, base/(1+gamma*iter)).
struct LambdaSchedule {
  double base = 1000.0;
  double gamma = 0.1;
  double min = 5.0;

  double at(int64_t iter) const { return std::max(min, base / (1.0 + gamma * iter)); }
};

// Trains in place and leaves the model at the weights of the epoch with the
// lowest dev EER. Emits `epoch <n> loss <float> dev_eer <float>` per epoch
// when `log` is given.
TrainResult train_model(SrlaRes2Net<float>& model, const Dataset& train, const Dataset& dev,
                        const OptimizerConfig& opt, const LambdaSchedule& lambda = {},
                        std::ostream* log = nullptr);

// Eval-mode CM scores (bonafide minus spoof angular score) for every item.
std::vector<ScoreRecord> score_dataset(const SrlaRes2Net<float>& model, const Dataset& data,
                                       int batch_size = 32);

}  // namespace f0spoof

#endif  // F0SPOOF_TRAIN_HPP
