// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <random>

#include "f0spoof/gradcheck.hpp"
#include "f0spoof/model.hpp"

using namespace f0spoof;

namespace {

template <class T>
Tensor<T> random_tensor(std::vector<int> shape, std::mt19937& rng, T lo = T(-1), T hi = T(1)) {
  return Tensor<T>::uniform(std::move(shape), rng, lo, hi);
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.stage_channels = {2, 4, 4, 4, 4};
  cfg.scale = 3;  // width 6, one SR hand-off per block
  cfg.input_freq = 9;
  cfg.input_time = 12;
  cfg.se_reduction = 2;
  return cfg;
}

}  // namespace

TEST_CASE("res2_transform equals the literal recurrence for n in {1,2,4,8}") {
  std::mt19937 rng(23);
  for (int n : {1, 2, 4, 8}) {
    CAPTURE(n);
    const int C = 8 * n;  // group width 8
    auto x = make_leaf(random_tensor<double>({2, C, 3, 4}, rng));
    const int w = C / n;

    // K_i: fixed elementwise transforms; SR: a fixed sigmoid gate
    std::vector<std::function<Var<double>(const Var<double>&)>> kernels, gates;
    for (int i = 0; i < n - 1; ++i) {
      double c = 0.5 + 0.25 * i;
      kernels.push_back([c](const Var<double>& v) { return relu(scale(v, c)); });
    }
    for (int i = 0; i < std::max(0, n - 2); ++i)
      gates.push_back([](const Var<double>& v) { return mul_bcast(v, sigmoid(channel_mean(v))); });

    auto out = res2_transform<double>(x, n, kernels, gates, nullptr);

    // literal transcription of the recurrence
    std::vector<Var<double>> ys;
    ys.push_back(narrow_channels(x, 0, w));  // y1 = s1
    if (n >= 2) ys.push_back(kernels[0](narrow_channels(x, w, w)));  // y2 = K2(s2)
    for (int i = 3; i <= n; ++i)
      ys.push_back(kernels[i - 2](add(narrow_channels(x, (i - 1) * w, w), gates[i - 3](ys.back()))));
    auto ref = n == 1 ? ys[0] : concat_channels(ys);

    REQUIRE(out->value.shape == ref->value.shape);
    for (int64_t i = 0; i < ref->value.numel(); ++i)
      CHECK(out->value.data[i] == doctest::Approx(ref->value.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("res2_transform validates scale and kernel count") {
  std::mt19937 rng(2);
  auto x = make_leaf(random_tensor<double>({1, 6, 2, 2}, rng));
  std::vector<std::function<Var<double>(const Var<double>&)>> none;
  CHECK_THROWS_AS(res2_transform<double>(x, 4, none, none, nullptr), ConfigError);  // 6 % 4
  CHECK_THROWS_AS(res2_transform<double>(x, 3, none, none, nullptr), ConfigError);  // needs 2
}

TEST_CASE("gates contract: |out| <= |in| elementwise on 50 random tensors") {
  std::mt19937 rng(31);
  ParamStore<float> store(7);
  SrGate<float> sr(store, "sr", 3, 2);
  LaGate<float> la(store, "la", 8, 0);
  SeGate<float> se(store, "se", 8, 2);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    auto x = make_leaf(random_tensor<float>({2, 8, 5, 6}, rng, -2.0f, 2.0f));
    for (auto gate : {sr.forward(x), la.forward(x), se.forward(x)}) {
      REQUIRE(gate->value.shape == x->value.shape);
      for (int64_t i = 0; i < x->value.numel(); ++i)
        CHECK(std::abs(gate->value.data[i]) <= std::abs(x->value.data[i]) + 1e-7f);
    }
  }
}

TEST_CASE("zero-weight gates pass exactly half the input") {
  ParamStore<float> store(7);
  SrGate<float> sr(store, "sr", 3, 2);
  LaGate<float> la(store, "la", 8, 0);
  SeGate<float> se(store, "se", 8, 2);
  for (auto& p : store.params) std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);

  std::mt19937 rng(3);
  auto x = make_leaf(random_tensor<float>({1, 8, 4, 4}, rng));
  for (auto gate : {sr.forward(x), la.forward(x), se.forward(x)})
    for (int64_t i = 0; i < x->value.numel(); ++i)
      CHECK(gate->value.data[i] == doctest::Approx(0.5f * x->value.data[i]).epsilon(1e-6));
}

TEST_CASE("ECA kernel size rule") {
  // t = floor(|log2 C + 1| / 2), k = t odd ? t : t+1, floor 1
  CHECK(eca_kernel_size(64) == 3);
  CHECK(eca_kernel_size(128) == 5);  // t = 4 -> 5
  CHECK(eca_kernel_size(256) == 5);
  CHECK(eca_kernel_size(16) == 3);
  CHECK(eca_kernel_size(2) == 1);
}

TEST_CASE("default model realizes the reference stage shapes") {
  SrlaRes2Net<float> model(ModelConfig{}, 1);
  std::mt19937 rng(5);
  auto x = make_leaf(random_tensor<float>({1, 1, 45, 600}, rng));
  NoGradGuard no_grad;
  auto scores = model.forward(x);
  const auto& trace = model.shape_trace();
  REQUIRE(trace.size() == 7);
  CHECK(trace[0] == std::vector<int>{1, 16, 45, 600});   // stem
  CHECK(trace[1] == std::vector<int>{1, 32, 45, 600});   // stage 1
  CHECK(trace[2] == std::vector<int>{1, 64, 23, 300});   // stage 2
  CHECK(trace[3] == std::vector<int>{1, 128, 12, 150});  // stage 3
  CHECK(trace[4] == std::vector<int>{1, 256, 6, 75});    // stage 4
  CHECK(trace[5] == std::vector<int>{1, 256, 1, 1});     // GAP
  CHECK(trace[6] == std::vector<int>{1, 2});             // scores
  CHECK(scores->value.shape == std::vector<int>{1, 2});
}

TEST_CASE("default SR-LA parameter count is 0.95M within 10%") {
  SrlaRes2Net<float> model(ModelConfig{}, 1);
  const auto count = model.store().param_count();
  MESSAGE("parameter count: ", count);
  CHECK(count >= 855000);
  CHECK(count <= 1045000);
}

TEST_CASE("model rejects wrong input shapes") {
  SrlaRes2Net<float> model(tiny_config(), 1);
  std::mt19937 rng(5);
  auto bad = make_leaf(random_tensor<float>({1, 1, 8, 12}, rng));
  CHECK_THROWS_AS(model.forward(bad), DimensionError);
}

TEST_CASE("eval forward is deterministic and leaves running stats untouched") {
  SrlaRes2Net<float> model(tiny_config(), 3);
  std::mt19937 rng(7);
  auto x = make_leaf(random_tensor<float>({2, 1, 9, 12}, rng));
  NoGradGuard no_grad;
  auto a = model.forward(x);
  auto buffers_before = model.store().buffers;
  std::vector<Tensor<float>> copies;
  for (auto* b : buffers_before) copies.push_back(*b);
  auto b = model.forward(x);
  CHECK(a->value.data == b->value.data);  // bitwise
  for (size_t i = 0; i < copies.size(); ++i)
    CHECK(model.store().buffers[i]->data == copies[i].data);
}

TEST_CASE("variant lattice: an override only disables gates, bit-exactly") {
  auto cfg = tiny_config();
  cfg.variant = Variant::SrLa;
  SrlaRes2Net<float> full(cfg, 11);

  auto plain_cfg = cfg;
  plain_cfg.variant = Variant::Plain;
  SrlaRes2Net<float> plain(plain_cfg, 99);
  copy_common_state(full, plain);

  std::mt19937 rng(13);
  auto x = make_leaf(random_tensor<float>({2, 1, 9, 12}, rng));
  NoGradGuard no_grad;
  auto a = plain.forward(x);
  auto b = full.forward(x, false, Variant::Plain);  // gates present but disabled
  CHECK(a->value.data == b->value.data);

  // and the gates do change the output when enabled
  auto c = full.forward(x);
  bool any_diff = false;
  for (int64_t i = 0; i < c->value.numel(); ++i)
    if (c->value.data[i] != a->value.data[i]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("every variant constructs and runs") {
  std::mt19937 rng(17);
  auto x = make_leaf(random_tensor<float>({1, 1, 9, 12}, rng));
  NoGradGuard no_grad;
  for (Variant v : {Variant::SrLa, Variant::SrSe, Variant::Sr, Variant::La, Variant::Se,
                    Variant::Plain, Variant::ResNet}) {
    CAPTURE(variant_name(v));
    auto cfg = tiny_config();
    cfg.variant = v;
    SrlaRes2Net<float> model(cfg, 1);
    auto scores = model.forward(x);
    CHECK(scores->value.all_finite());
    CHECK(parse_variant(variant_name(v)) == v);
  }
}

TEST_CASE("angle_linear eval scores are ||x|| cos(theta)") {
  auto x = make_leaf(Tensor<double>({1, 2}, {3.0, 4.0}));
  auto w = make_leaf(Tensor<double>({2, 2}, {10.0, 0.0, 0.0, -2.0}));
  auto y = angle_linear(x, w, false, {}, 4, 0.0);
  CHECK(y->value.data[0] == doctest::Approx(3.0).epsilon(1e-12));   // x . (1,0)
  CHECK(y->value.data[1] == doctest::Approx(-4.0).epsilon(1e-12));  // x . (0,-1)

  auto zero = make_leaf(Tensor<double>({1, 2}, {0.0, 0.0}));
  auto yz = angle_linear(zero, w, false, {}, 4, 0.0);
  CHECK(yz->value.data[0] == 0.0);
  CHECK(yz->value.data[1] == 0.0);
}

TEST_CASE("angle_linear margin m=1 reduces to the plain angular score") {
  std::mt19937 rng(19);
  auto x = make_leaf(random_tensor<double>({3, 4}, rng));
  auto w = make_leaf(random_tensor<double>({2, 4}, rng));
  std::vector<int> labels{0, 1, 0};
  auto train = angle_linear(x, w, true, labels, 1, 7.0);
  auto eval = angle_linear(x, w, false, {}, 1, 0.0);
  for (int64_t i = 0; i < train->value.numel(); ++i)
    CHECK(train->value.data[i] == doctest::Approx(eval->value.data[i]).epsilon(1e-12));
}

TEST_CASE("angle_linear margin penalizes the target class score") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = make_leaf(random_tensor<double>({1, 6}, rng));
    auto w = make_leaf(random_tensor<double>({2, 6}, rng));
    auto train = angle_linear(x, w, true, {0}, 4, 0.0);  // fully annealed margin
    auto eval = angle_linear(x, w, false, {}, 4, 0.0);
    CHECK(train->value.data[0] <= eval->value.data[0] + 1e-12);
    CHECK(train->value.data[1] == doctest::Approx(eval->value.data[1]).epsilon(1e-12));
  }
}

TEST_CASE("angle_linear gradient check (train and eval)") {
  for (uint32_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    std::mt19937 rng(seed + 41);
    auto x = make_leaf(random_tensor<double>({2, 5}, rng), true);
    auto w = make_leaf(random_tensor<double>({3, 5}, rng), true);
    std::vector<int> labels{1, 2};
    for (bool train : {false, true}) {
      CAPTURE(train);
      auto res = grad_check_params<double>(
          [&]() {
            return sum_all(angle_linear(x, w, train, labels, 4, 5.0));
          },
          {x, w});
      CHECK(res.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("cross_entropy of symmetric scores is ln 2 and its gradient checks out") {
  auto s = make_leaf(Tensor<double>({2, 2}, {0.3, 0.3, -1.2, -1.2}), true);
  auto loss = cross_entropy(s, {0, 1});
  CHECK(loss->value.data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  auto res = grad_check_params<double>([&]() { return cross_entropy(s, {0, 1}); }, {s});
  CHECK(res.max_rel_error <= 1e-4);
}

TEST_CASE("tiny full model passes the finite-difference check") {
  auto cfg = tiny_config();
  SrlaRes2Net<double> model(cfg, 51);
  std::mt19937 rng(53);
  auto x = make_leaf(random_tensor<double>({2, 1, 9, 12}, rng, -0.5, 0.5));
  std::vector<int> labels{0, 1};
  auto fn = [&]() {
    return cross_entropy(model.train_scores(x, labels, 5.0), labels);
  };
  auto res = grad_check_params<double>(fn, model.store().params, 1e-5);
  MESSAGE("max rel error ", res.max_rel_error, ", kinks skipped ", res.kinks_skipped);
  CHECK(res.max_rel_error <= 1e-4);
}

TEST_CASE("model config json round trip") {
  auto cfg = tiny_config();
  cfg.variant = Variant::SrSe;
  auto back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.scale == cfg.scale);
  CHECK(back.stage_channels == cfg.stage_channels);
  CHECK(back.variant == Variant::SrSe);
  CHECK(back.input_freq == 9);

  auto bad = cfg;
  bad.scale = 4;  // width 6 not divisible
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
