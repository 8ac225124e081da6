// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_LAYERS_HPP
#define F0SPOOF_LAYERS_HPP

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "f0spoof/autograd.hpp"

namespace f0spoof {

// Owns every trainable parameter and persistent buffer of a network, keyed
// by hierarchical name for checkpointing.
template <class T>
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Var<T>> params;
  std::vector<std::string> buffer_names;
  std::vector<Tensor<T>*> buffers;  // BN running stats, owned by the layers
  std::mt19937 rng;

  explicit ParamStore(uint64_t seed = 0) : rng(static_cast<std::mt19937::result_type>(seed)) {}

  Var<T> add(const std::string& name, Tensor<T> init) {
    auto v = make_leaf(std::move(init), /*requires_grad=*/true);
    names.push_back(name);
    params.push_back(v);
    return v;
  }

  void register_buffer(const std::string& name, Tensor<T>* buf) {
    buffer_names.push_back(name);
    buffers.push_back(buf);
  }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& p : params) n += p->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params) p->zero_grad();
  }

  // Kaiming-uniform fan-in init (ReLU gain): bound = sqrt(2) * sqrt(3/fan_in)
  Tensor<T> kaiming_uniform(std::vector<int> shape, int fan_in) {
    T bound = static_cast<T>(std::sqrt(2.0) * std::sqrt(3.0 / fan_in));
    return Tensor<T>::uniform(std::move(shape), rng, -bound, bound);
  }
};

template <class T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(ParamStore<T>& store, const std::string& name, ConvSpec spec, bool bias)
      : spec_(spec) {
    spec_.validate();
    const int fan_in = spec_.in_channels / spec_.groups * spec_.kh * spec_.kw;
    w_ = store.add(name + ".w",
                   store.kaiming_uniform(
                       {spec_.out_channels, spec_.in_channels / spec_.groups, spec_.kh, spec_.kw},
                       fan_in));
    if (bias) b_ = store.add(name + ".b", Tensor<T>::zeros({spec_.out_channels}));
  }

  Var<T> forward(const Var<T>& x) const { return conv2d(x, w_, b_, spec_); }

  const ConvSpec& spec() const { return spec_; }
  Var<T> weight() const { return w_; }
  Var<T> bias() const { return b_; }

 private:
  ConvSpec spec_;
  Var<T> w_;
  Var<T> b_;
};

template <class T>
class BatchNorm2dLayer {
 public:
  BatchNorm2dLayer() = default;
  BatchNorm2dLayer(ParamStore<T>& store, const std::string& name, int channels, T momentum = T(0.1),
                   T eps = T(1e-5))
      : momentum_(momentum), eps_(eps) {
    gamma_ = store.add(name + ".gamma", Tensor<T>::ones({channels}));
    beta_ = store.add(name + ".beta", Tensor<T>::zeros({channels}));
    running_mean_ = std::make_shared<Tensor<T>>(Tensor<T>::zeros({channels}));
    running_var_ = std::make_shared<Tensor<T>>(Tensor<T>::ones({channels}));
    store.register_buffer(name + ".running_mean", running_mean_.get());
    store.register_buffer(name + ".running_var", running_var_.get());
  }

  Var<T> forward(const Var<T>& x, bool train) const {
    return batch_norm2d(x, gamma_, beta_, running_mean_.get(), running_var_.get(), train, momentum_,
                        eps_);
  }

 private:
  T momentum_ = T(0.1);
  T eps_ = T(1e-5);
  Var<T> gamma_, beta_;
  std::shared_ptr<Tensor<T>> running_mean_, running_var_;
};

template <class T>
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(ParamStore<T>& store, const std::string& name, int in, int out, bool bias = true) {
    w_ = store.add(name + ".w", store.kaiming_uniform({out, in}, in));
    if (bias) b_ = store.add(name + ".b", Tensor<T>::zeros({out}));
  }

  Var<T> forward(const Var<T>& x) const { return linear(x, w_, b_); }
  Var<T> weight() const { return w_; }

 private:
  Var<T> w_;
  Var<T> b_;
};

}  // namespace f0spoof

#endif  // F0SPOOF_LAYERS_HPP
