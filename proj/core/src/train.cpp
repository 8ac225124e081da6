// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

#include "f0spoof/train.hpp"

namespace f0spoof {

namespace {

// [B,1,F,T] batch from the listed dataset indices.
Tensor<float> make_batch(const Dataset& data, const std::vector<size_t>& idx, size_t from,
                         size_t to) {
  const int B = static_cast<int>(to - from);
  const int F = data.features[idx[from]].dim(0);
  const int T = data.features[idx[from]].dim(1);
  Tensor<float> batch({B, 1, F, T});
  for (int b = 0; b < B; ++b) {
    const Tensor<float>& f = data.features[idx[from + b]];
    if (f.dim(0) != F || f.dim(1) != T)
      throw DimensionError("train: inconsistent feature shapes in dataset (" + f.shape_str() +
                           " vs first item)");
    std::copy(f.data.begin(), f.data.end(),
              batch.data.begin() + static_cast<int64_t>(b) * F * T);
  }
  return batch;
}

void require_both_classes(const Dataset& d, const std::string& split) {
  bool bona = false, spoof = false;
  for (int l : d.labels) (l == 0 ? bona : spoof) = true;
  if (!bona || !spoof)
    throw DataError("train: " + split + " split must contain both bonafide and spoof items");
}

struct Snapshot {
  std::vector<Tensor<float>> params;
  std::vector<Tensor<float>> buffers;
};

Snapshot take_snapshot(const ParamStore<float>& store) {
  Snapshot s;
  for (const auto& p : store.params) s.params.push_back(p->value);
  for (const auto* b : store.buffers) s.buffers.push_back(*b);
  return s;
}

void restore_snapshot(ParamStore<float>& store, const Snapshot& s) {
  for (size_t i = 0; i < store.params.size(); ++i) store.params[i]->value = s.params[i];
  for (size_t i = 0; i < store.buffers.size(); ++i) *store.buffers[i] = s.buffers[i];
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& protocol_path,
                     const std::filesystem::path& feature_dir) {
  Protocol proto = parse_protocol(protocol_path);
  if (proto.entries.empty())
    throw DataError("train: protocol '" + protocol_path.string() + "' is empty");
  Dataset d;
  d.features.reserve(proto.entries.size());
  for (const auto& e : proto.entries) {
    d.features.push_back(read_feature_cache(feature_dir / (e.utt_id + ".f0sb")));
    d.labels.push_back(e.key == Key::Bonafide ? 0 : 1);
    d.utt_ids.push_back(e.utt_id);
    d.attack_ids.push_back(e.system_id);
  }
  return d;
}

TrainResult train_model(SrlaRes2Net<float>& model, const Dataset& train, const Dataset& dev,
                        const OptimizerConfig& opt, const LambdaSchedule& lambda,
                        std::ostream* log) {
  opt.validate();
  if (train.size() == 0 || dev.size() == 0)
    throw DataError("train: empty train or dev split");
  require_both_classes(train, "train");
  require_both_classes(dev, "dev");

  Adam<float> adam(model.store(), opt);
  TrainResult result;
  Snapshot best;
  int64_t iter = 0;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::mt19937 shuffle_rng(static_cast<uint32_t>(opt.seed + static_cast<uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    int64_t batches = 0;
    for (size_t from = 0; from < order.size(); from += static_cast<size_t>(opt.batch_size)) {
      const size_t to = std::min(order.size(), from + static_cast<size_t>(opt.batch_size));
      auto x = make_leaf(make_batch(train, order, from, to));
      std::vector<int> labels;
      for (size_t i = from; i < to; ++i) labels.push_back(train.labels[order[i]]);

      model.store().zero_grads();
      auto scores = model.train_scores(x, labels, static_cast<float>(lambda.at(iter)));
      auto loss = cross_entropy(scores, labels);
      backward(loss);
      adam.step();
      ++iter;

      loss_sum += static_cast<double>(loss->value.data[0]);
      ++batches;
    }

    EpochLog ep;
    ep.mean_loss = loss_sum / static_cast<double>(batches);
    ep.dev_eer = compute_eer(score_dataset(model, dev, opt.batch_size)).eer;
    result.epochs.push_back(ep);
    if (log)
      (*log) << "epoch " << epoch << " loss " << ep.mean_loss << " dev_eer " << ep.dev_eer
             << std::endl;

    if (result.best_epoch == 0 || ep.dev_eer < result.best_dev_eer) {
      result.best_epoch = epoch;
      result.best_dev_eer = ep.dev_eer;
      best = take_snapshot(model.store());
    }
  }

  restore_snapshot(model.store(), best);
  return result;
}

std::vector<ScoreRecord> score_dataset(const SrlaRes2Net<float>& model, const Dataset& data,
                                       int batch_size) {
  if (batch_size < 1) throw ConfigError("score: batch size must be >= 1");
  std::vector<size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<ScoreRecord> out;
  out.reserve(data.size());
  NoGradGuard no_grad;
  for (size_t from = 0; from < idx.size(); from += static_cast<size_t>(batch_size)) {
    const size_t to = std::min(idx.size(), from + static_cast<size_t>(batch_size));
    auto x = make_leaf(make_batch(data, idx, from, to));
    auto scores = model.forward(x, /*train=*/false);
    const int C = scores->value.dim(1);
    if (C < 2) throw DimensionError("score: model must emit at least two class scores");
    for (size_t i = from; i < to; ++i) {
      const int b = static_cast<int>(i - from);
      ScoreRecord r;
      r.utt_id = data.utt_ids[i];
      r.attack_id = data.attack_ids[i];
      r.key = data.labels[i] == 0 ? Key::Bonafide : Key::Spoof;
      r.score = static_cast<double>(scores->value.data[static_cast<int64_t>(b) * C] -
                                    scores->value.data[static_cast<int64_t>(b) * C + 1]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace f0spoof
