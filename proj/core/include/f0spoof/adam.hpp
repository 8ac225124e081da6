// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_ADAM_HPP
#define F0SPOOF_ADAM_HPP

#include <cmath>
#include <vector>

#include "f0spoof/layers.hpp"

namespace f0spoof {

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double weight_decay = 1e-4;
  double learning_rate = 3e-4;
  int epochs = 32;
  int batch_size = 32;
  uint64_t seed = 1;
  bool weighted_sampling = false;

  void validate() const {
    if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
      throw ConfigError("adam: betas must be in (0,1)");
    if (eps <= 0) throw ConfigError("adam: eps must be positive");
    if (epochs < 1) throw ConfigError("adam: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("adam: batch size must be >= 1");
    if (learning_rate <= 0) throw ConfigError("adam: learning rate must be positive");
  }
};

// Classic Adam with bias correction; weight decay enters as an L2 term added
// to the gradient (coupled, not decoupled).
template <class T>
class Adam {
 public:
  Adam(ParamStore<T>& store, OptimizerConfig cfg) : store_(&store), cfg_(cfg) {
    cfg_.validate();
    m_.reserve(store.params.size());
    v_.reserve(store.params.size());
    for (const auto& p : store.params) {
      m_.push_back(Tensor<T>::zeros(p->value.shape));
      v_.push_back(Tensor<T>::zeros(p->value.shape));
    }
  }

  void step() {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T corr1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, t_));
    const T corr2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, t_));
    const T lr = static_cast<T>(cfg_.learning_rate);
    const T wd = static_cast<T>(cfg_.weight_decay);
    const T eps = static_cast<T>(cfg_.eps);
    for (size_t i = 0; i < store_->params.size(); ++i) {
      auto& p = store_->params[i];
      if (p->grad.shape != p->value.shape) continue;  // no gradient this step
      for (int64_t j = 0; j < p->value.numel(); ++j) {
        T g = p->grad.data[j];
        if (!std::isfinite(static_cast<double>(g)))
          throw NumericError("adam: non-finite gradient in parameter '" + store_->names[i] + "'");
        g += wd * p->value.data[j];
        m_[i].data[j] = b1 * m_[i].data[j] + (T(1) - b1) * g;
        v_[i].data[j] = b2 * v_[i].data[j] + (T(1) - b2) * g * g;
        T mhat = m_[i].data[j] / corr1;
        T vhat = v_[i].data[j] / corr2;
        p->value.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  int64_t steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  ParamStore<T>* store_;
  OptimizerConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace f0spoof

#endif  // F0SPOOF_ADAM_HPP
