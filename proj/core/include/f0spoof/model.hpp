// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_MODEL_HPP
#define F0SPOOF_MODEL_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "f0spoof/layers.hpp"
#include "f0spoof/loss.hpp"

namespace f0spoof {

enum class Variant { SrLa, SrSe, Sr, La, Se, Plain, ResNet };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::SrLa: return "sr-la";
    case Variant::SrSe: return "sr-se";
    case Variant::Sr: return "sr";
    case Variant::La: return "la";
    case Variant::Se: return "se";
    case Variant::Plain: return "plain";
    case Variant::ResNet: return "resnet";
  }
  return "sr-la";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "sr-la") return Variant::SrLa;
  if (s == "sr-se") return Variant::SrSe;
  if (s == "sr") return Variant::Sr;
  if (s == "la") return Variant::La;
  if (s == "se") return Variant::Se;
  if (s == "plain") return Variant::Plain;
  if (s == "resnet") return Variant::ResNet;
  throw ConfigError("unknown variant '" + s + "'");
}

struct VariantFlags {
  bool sr = false;
  bool la = false;
  bool se = false;
  bool res2 = true;  // false: single full-width 3x3 (plain ResNet-style block)
};

inline VariantFlags variant_flags(Variant v) {
  switch (v) {
    case Variant::SrLa: return {true, true, false, true};
    case Variant::SrSe: return {true, false, true, true};
    case Variant::Sr: return {true, false, false, true};
    case Variant::La: return {false, true, false, true};
    case Variant::Se: return {false, false, true, true};
    case Variant::Plain: return {false, false, false, true};
    case Variant::ResNet: return {false, false, false, false};
  }
  return {};
}

struct ModelConfig {
  int scale = 8;  // channel groups n
  std::vector<int> stage_channels{16, 32, 64, 128, 256};  // stem + 4 stages
  int blocks_per_stage = 2;
  double width_mult = 1.5;  // internal block width as a multiple of the stage output
  int sr_kernel = 3;
  int sr_dilation = 2;
  int la_kernel = 0;  // 0 = ECA-style adaptive odd k
  int se_reduction = 16;
  int classes = 2;
  int margin = 4;
  Variant variant = Variant::SrLa;
  int input_freq = 45;
  int input_time = 600;

  void validate() const {
    if (scale < 1) throw ConfigError("model: scale must be >= 1");
    if (stage_channels.size() != 5) throw ConfigError("model: expected 5 stage channel counts");
    if (blocks_per_stage < 1) throw ConfigError("model: blocks_per_stage must be >= 1");
    if (margin < 1 || margin > 4) throw ConfigError("model: margin must be in 1..4");
    for (size_t i = 1; i < stage_channels.size(); ++i) {
      int w = static_cast<int>(std::lround(stage_channels[i] * width_mult));
      if (w % scale != 0)
        throw ConfigError("model: internal width " + std::to_string(w) +
                          " not divisible by scale " + std::to_string(scale));
    }
  }

  nlohmann::json to_json() const {
    return {{"scale", scale},
            {"stage_channels", stage_channels},
            {"blocks_per_stage", blocks_per_stage},
            {"width_mult", width_mult},
            {"sr_kernel", sr_kernel},
            {"sr_dilation", sr_dilation},
            {"la_kernel", la_kernel},
            {"se_reduction", se_reduction},
            {"classes", classes},
            {"margin", margin},
            {"variant", variant_name(variant)},
            {"input_freq", input_freq},
            {"input_time", input_time}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.scale = j.at("scale").get<int>();
    c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
    c.blocks_per_stage = j.at("blocks_per_stage").get<int>();
    c.width_mult = j.at("width_mult").get<double>();
    c.sr_kernel = j.at("sr_kernel").get<int>();
    c.sr_dilation = j.at("sr_dilation").get<int>();
    c.la_kernel = j.at("la_kernel").get<int>();
    c.se_reduction = j.at("se_reduction").get<int>();
    c.classes = j.at("classes").get<int>();
    c.margin = j.at("margin").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.input_freq = j.at("input_freq").get<int>();
    c.input_time = j.at("input_time").get<int>();
    c.validate();
    return c;
  }
};

// ECA rule: k = t (t odd) or t+1, t = floor(|log2(C) + 1| / 2)
inline int eca_kernel_size(int channels) {
  int t = static_cast<int>(std::abs((std::log2(static_cast<double>(channels)) + 1.0) / 2.0));
  int k = (t % 2 == 1) ? t : t + 1;
  return std::max(k, 1);
}

// ---------------------------------------------------------------------------
// Attention gates
// ---------------------------------------------------------------------------

// Spatial reconstruction: channel mean -> depthwise dilated conv -> sigmoid
// map (1 x F x T) multiplied back onto every channel.
template <class T>
class SrGate {
 public:
  SrGate() = default;
  SrGate(ParamStore<T>& store, const std::string& name, int kernel, int dilation)
      : k_(kernel), d_(dilation) {
    if (k_ % 2 == 0) throw ConfigError("sr gate: even kernel size");
    w_ = store.add(name + ".w", store.kaiming_uniform({1, 1, k_, k_}, k_ * k_));
    b_ = store.add(name + ".b", Tensor<T>::zeros({1}));
  }

  Var<T> forward(const Var<T>& x) const {
    auto gate = sigmoid(depthwise_dilated_conv2d(channel_mean(x), w_, b_, k_, d_));
    return mul_bcast(x, gate);
  }

 private:
  int k_ = 3, d_ = 2;
  Var<T> w_, b_;
};

// Local attention: GAP -> squeeze/transpose -> 1-D conv over channels ->
// unsqueeze -> sigmoid -> per-channel weights (C x 1 x 1).
template <class T>
class LaGate {
 public:
  LaGate() = default;
  LaGate(ParamStore<T>& store, const std::string& name, int channels, int fixed_k)
      : c_(channels), k_(fixed_k > 0 ? fixed_k : eca_kernel_size(channels)) {
    if (k_ % 2 == 0) throw ConfigError("la gate: even kernel size");
    w_ = store.add(name + ".w", store.kaiming_uniform({1, 1, 1, k_}, k_));
    b_ = store.add(name + ".b", Tensor<T>::zeros({1}));
  }

  Var<T> forward(const Var<T>& x) const {
    const int N = x->value.dim(0);
    auto squeezed = reshape(global_avg_pool(x), {N, 1, c_});
    auto att = conv1d(squeezed, w_, b_, k_);
    auto gate = sigmoid(reshape(att, {N, c_, 1, 1}));
    return mul_bcast(x, gate);
  }

  int kernel() const { return k_; }

 private:
  int c_ = 0, k_ = 3;
  Var<T> w_, b_;
};

// Squeeze-and-excitation: GAP -> FC down -> ReLU -> FC up -> sigmoid.
template <class T>
class SeGate {
 public:
  SeGate() = default;
  SeGate(ParamStore<T>& store, const std::string& name, int channels, int reduction)
      : c_(channels) {
    if (channels % reduction != 0)
      throw ConfigError("se gate: channels not divisible by reduction");
    fc_down_ = LinearLayer<T>(store, name + ".fc_down", channels, channels / reduction);
    fc_up_ = LinearLayer<T>(store, name + ".fc_up", channels / reduction, channels);
  }

  Var<T> forward(const Var<T>& x) const {
    const int N = x->value.dim(0);
    auto squeezed = reshape(global_avg_pool(x), {N, c_});
    auto att = fc_up_.forward(relu(fc_down_.forward(squeezed)));
    auto gate = sigmoid(reshape(att, {N, c_, 1, 1}));
    return mul_bcast(x, gate);
  }

 private:
  int c_ = 0;
  LinearLayer<T> fc_down_, fc_up_;
};

// ---------------------------------------------------------------------------
// Res2 transform
// ---------------------------------------------------------------------------

// Multi-scale channel-group recurrence:
//   y_1 = first_branch(s_1)
//   y_2 = K_2(s_2)
//   y_i = K_i(s_i + SR(y_{i-1})), 3 <= i <= n   (hierarchical mode)
// Non-hierarchical mode (used by strided blocks, where the hand-off would
// mix resolutions) drops the cross-group addition: y_i = K_i(s_i).
// kernels[i] is K_{i+2}; sr_gates[i] gates the hand-off of y_{i+2}; either
// may be empty. Concatenation restores the channel count.
template <class T>
Var<T> res2_transform(const Var<T>& x, int n,
                      const std::vector<std::function<Var<T>(const Var<T>&)>>& kernels,
                      const std::vector<std::function<Var<T>(const Var<T>&)>>& sr_gates,
                      const std::function<Var<T>(const Var<T>&)>& first_branch,
                      bool hierarchical = true) {
  const int C = x->value.dim(1);
  if (n < 1 || C % n != 0)
    throw ConfigError("res2_transform: channels " + std::to_string(C) +
                      " not divisible by scale " + std::to_string(n));
  if (static_cast<int>(kernels.size()) != n - 1)
    throw ConfigError("res2_transform: expected n-1 kernels");
  const int w = C / n;
  auto identity = [](const Var<T>& v) { return v; };
  const auto& y1_fn = first_branch ? first_branch : std::function<Var<T>(const Var<T>&)>(identity);

  std::vector<Var<T>> ys;
  ys.reserve(n);
  ys.push_back(y1_fn(narrow_channels(x, 0, w)));
  for (int i = 2; i <= n; ++i) {
    auto s_i = narrow_channels(x, (i - 1) * w, w);
    Var<T> h = s_i;
    if (hierarchical && i >= 3) {
      Var<T> handoff = ys.back();
      if (!sr_gates.empty()) handoff = sr_gates[i - 3](handoff);
      h = add(s_i, handoff);
    }
    ys.push_back(kernels[i - 2](h));
  }
  if (n == 1) return ys[0];
  return concat_channels(ys);
}

// ---------------------------------------------------------------------------
// Res2 block
// ---------------------------------------------------------------------------

template <class T>
class Res2Block {
 public:
  Res2Block() = default;
  Res2Block(ParamStore<T>& store, const std::string& name, const ModelConfig& cfg, int in, int out,
            int stride)
      : n_(cfg.scale), stride_(stride), built_(variant_flags(cfg.variant)) {
    width_ = static_cast<int>(std::lround(out * cfg.width_mult));
    if (width_ % n_ != 0) throw ConfigError("res2 block: width not divisible by scale");
    const int gw = width_ / n_;

    entry_ = Conv2dLayer<T>(store, name + ".entry", pointwise(in, width_), /*bias=*/false);
    entry_bn_ = BatchNorm2dLayer<T>(store, name + ".entry_bn", width_);

    if (built_.res2) {
      for (int i = 0; i < n_ - 1; ++i) {
        auto idx = std::to_string(i);
        group_convs_.push_back(
            Conv2dLayer<T>(store, name + ".group" + idx, conv3x3(gw, gw, stride), false));
        group_bns_.emplace_back(store, name + ".group" + idx + "_bn", gw);
      }
    } else {
      // full-width 3x3 path for the ResNet ablation variant
      full_conv_ = Conv2dLayer<T>(store, name + ".full", conv3x3(width_, width_, stride), false);
      full_bn_ = BatchNorm2dLayer<T>(store, name + ".full_bn", width_);
    }

    if (built_.sr)
      for (int i = 0; i < std::max(0, n_ - 2); ++i)
        sr_gates_.emplace_back(store, name + ".sr" + std::to_string(i), cfg.sr_kernel,
                               cfg.sr_dilation);
    if (built_.la) la_ = LaGate<T>(store, name + ".la", out, cfg.la_kernel);
    if (built_.se) se_ = SeGate<T>(store, name + ".se", out, cfg.se_reduction);

    exit_ = Conv2dLayer<T>(store, name + ".exit", pointwise(width_, out), false);
    exit_bn_ = BatchNorm2dLayer<T>(store, name + ".exit_bn", out);

    if (in != out || stride != 1) {
      ConvSpec sc = pointwise(in, out);
      sc.stride_h = sc.stride_w = stride;
      shortcut_ = std::make_shared<Conv2dLayer<T>>(store, name + ".shortcut", sc, false);
      shortcut_bn_ = std::make_shared<BatchNorm2dLayer<T>>(store, name + ".shortcut_bn", out);
    }
  }

  Var<T> forward(const Var<T>& x, bool train, const VariantFlags& requested) const {
    // a forward override can only disable modules, never invent them
    VariantFlags fl;
    fl.sr = requested.sr && built_.sr;
    fl.la = requested.la && built_.la;
    fl.se = requested.se && built_.se;
    fl.res2 = built_.res2;

    auto h = relu(entry_bn_.forward(entry_.forward(x), train));

    Var<T> mid;
    if (fl.res2) {
      std::vector<std::function<Var<T>(const Var<T>&)>> kernels;
      for (int i = 0; i < n_ - 1; ++i)
        kernels.push_back([this, i, train](const Var<T>& v) {
          return relu(group_bns_[i].forward(group_convs_[i].forward(v), train));
        });
      std::vector<std::function<Var<T>(const Var<T>&)>> gates;
      if (fl.sr && stride_ == 1)
        for (const auto& g : sr_gates_)
          gates.push_back([&g](const Var<T>& v) { return g.forward(v); });
      std::function<Var<T>(const Var<T>&)> first_branch;
      if (stride_ != 1) {
        int s = stride_;
        first_branch = [s](const Var<T>& v) { return avg_pool2d(v, 3, s, 1); };
      }
      mid = res2_transform(h, n_, kernels, gates, first_branch, /*hierarchical=*/stride_ == 1);
    } else {
      mid = relu(full_bn_.forward(full_conv_.forward(h), train));
    }

    auto out = exit_bn_.forward(exit_.forward(mid), train);
    if (fl.la) out = la_.forward(out);
    if (fl.se) out = se_.forward(out);

    Var<T> identity = x;
    if (shortcut_) identity = shortcut_bn_->forward(shortcut_->forward(x), train);
    return relu(add(out, identity));
  }

 private:
  static ConvSpec pointwise(int in, int out) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    return s;
  }
  static ConvSpec conv3x3(int in, int out, int stride) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.kh = s.kw = 3;
    s.stride_h = s.stride_w = stride;
    s.pad_h = s.pad_w = 1;
    return s;
  }

  int n_ = 8;
  int stride_ = 1;
  int width_ = 0;
  VariantFlags built_;
  Conv2dLayer<T> entry_, exit_, full_conv_;
  BatchNorm2dLayer<T> entry_bn_, exit_bn_, full_bn_;
  std::vector<Conv2dLayer<T>> group_convs_;
  std::vector<BatchNorm2dLayer<T>> group_bns_;
  std::vector<SrGate<T>> sr_gates_;
  LaGate<T> la_;
  SeGate<T> se_;
  std::shared_ptr<Conv2dLayer<T>> shortcut_;
  std::shared_ptr<BatchNorm2dLayer<T>> shortcut_bn_;
};

// ---------------------------------------------------------------------------
// Full network
// ---------------------------------------------------------------------------

template <class T>
class SrlaRes2Net {
 public:
  explicit SrlaRes2Net(ModelConfig cfg, uint64_t seed = 0) : cfg_(std::move(cfg)), store_(seed) {
    cfg_.validate();
    ConvSpec stem;
    stem.in_channels = 1;
    stem.out_channels = cfg_.stage_channels[0];
    stem.kh = stem.kw = 3;
    stem.pad_h = stem.pad_w = 1;
    stem_ = Conv2dLayer<T>(store_, "stem", stem, false);
    stem_bn_ = BatchNorm2dLayer<T>(store_, "stem_bn", cfg_.stage_channels[0]);

    int in = cfg_.stage_channels[0];
    for (int s = 0; s < 4; ++s) {
      const int out = cfg_.stage_channels[s + 1];
      std::vector<Res2Block<T>> blocks;
      for (int b = 0; b < cfg_.blocks_per_stage; ++b) {
        const int stride = (s > 0 && b == 0) ? 2 : 1;
        blocks.emplace_back(store_, "stage" + std::to_string(s + 1) + ".block" + std::to_string(b),
                            cfg_, in, out, stride);
        in = out;
      }
      stages_.push_back(std::move(blocks));
    }
    head_w_ = store_.add("head.w", store_.kaiming_uniform({cfg_.classes, in}, in));
  }

  // Embedding through stem, stages and GAP: [N,1,F,T] -> [N,C_last].
  // Records the per-stage output shapes of the most recent call.
  Var<T> embed(const Var<T>& x, bool train,
               std::optional<Variant> override_variant = std::nullopt) const {
    const auto& s = x->value.shape;
    if (s.size() != 4 || s[1] != 1 || s[2] != cfg_.input_freq || s[3] != cfg_.input_time)
      throw DimensionError("model: expected input N x 1 x " + std::to_string(cfg_.input_freq) +
                           " x " + std::to_string(cfg_.input_time) + ", got " +
                           x->value.shape_str());
    VariantFlags fl = variant_flags(override_variant.value_or(cfg_.variant));
    shape_trace_.clear();
    auto h = relu(stem_bn_.forward(stem_.forward(x), train));
    shape_trace_.push_back(h->value.shape);
    for (const auto& stage : stages_) {
      for (const auto& block : stage) h = block.forward(h, train, fl);
      shape_trace_.push_back(h->value.shape);
    }
    auto pooled = global_avg_pool(h);
    shape_trace_.push_back(pooled->value.shape);
    return reshape(pooled, {s[0], pooled->value.dim(1)});
  }

  // Eval-mode angular scores [N,classes]; per-utterance CM score is
  // scores[0] - scores[1] (bonafide minus spoof).
  Var<T> forward(const Var<T>& x, bool train = false,
                 std::optional<Variant> override_variant = std::nullopt) const {
    auto emb = embed(x, train, override_variant);
    auto scores = angle_linear(emb, head_w_, /*train=*/false, {}, cfg_.margin, T(0));
    shape_trace_.push_back(scores->value.shape);
    return scores;
  }

  // Margin-adjusted training scores for the given labels.
  Var<T> train_scores(const Var<T>& x, const std::vector<int>& labels, T lambda,
                      std::optional<Variant> override_variant = std::nullopt) const {
    auto emb = embed(x, /*train=*/true, override_variant);
    return angle_linear(emb, head_w_, /*train=*/true, labels, cfg_.margin, lambda);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& store() { return store_; }
  const ParamStore<T>& store() const { return store_; }
  Var<T> head_weight() const { return head_w_; }
  const std::vector<std::vector<int>>& shape_trace() const { return shape_trace_; }

 private:
  ModelConfig cfg_;
  ParamStore<T> store_;
  Conv2dLayer<T> stem_;
  BatchNorm2dLayer<T> stem_bn_;
  std::vector<std::vector<Res2Block<T>>> stages_;
  Var<T> head_w_;
  mutable std::vector<std::vector<int>> shape_trace_;
};

// Copies every identically-named parameter and buffer from src to dst.
// Returns the number of tensors copied.
template <class T>
int copy_common_state(const SrlaRes2Net<T>& src, SrlaRes2Net<T>& dst) {
  int copied = 0;
  const auto& ss = src.store();
  auto& ds = dst.store();
  for (size_t i = 0; i < ds.names.size(); ++i) {
    for (size_t j = 0; j < ss.names.size(); ++j) {
      if (ds.names[i] == ss.names[j] &&
          ds.params[i]->value.shape == ss.params[j]->value.shape) {
        ds.params[i]->value = ss.params[j]->value;
        ++copied;
        break;
      }
    }
  }
  for (size_t i = 0; i < ds.buffer_names.size(); ++i)
    for (size_t j = 0; j < ss.buffer_names.size(); ++j)
      if (ds.buffer_names[i] == ss.buffer_names[j] &&
          ds.buffers[i]->shape == ss.buffers[j]->shape) {
        *ds.buffers[i] = *ss.buffers[j];
        ++copied;
        break;
      }
  return copied;
}

}  // namespace f0spoof

#endif  // F0SPOOF_MODEL_HPP
