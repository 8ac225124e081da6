// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_LOSS_HPP
#define F0SPOOF_LOSS_HPP

#include <cmath>
#include <vector>

#include "f0spoof/autograd.hpp"

namespace f0spoof {

namespace detail {

// cos(m*theta) as a polynomial in c = cos(theta), m in 1..4
template <class T>
T cos_m_theta(int m, T c) {
  switch (m) {
    case 1: return c;
    case 2: return T(2) * c * c - T(1);
    case 3: return (T(4) * c * c - T(3)) * c;
    case 4: return T(8) * c * c * (c * c - T(1)) + T(1);
    default: throw ConfigError("angle_linear: margin m must be in 1..4");
  }
}

template <class T>
T cos_m_theta_deriv(int m, T c) {
  switch (m) {
    case 1: return T(1);
    case 2: return T(4) * c;
    case 3: return T(12) * c * c - T(3);
    case 4: return T(32) * c * c * c - T(16) * c;
    default: throw ConfigError("angle_linear: margin m must be in 1..4");
  }
}

}  // namespace detail

// Angular-margin scores. Eval mode: s_c = ||x|| cos(theta_c) = x . w_c/||w_c||.
// Train mode replaces the target-class entry by
//   ||x|| * (lambda*cos(theta) + psi(theta)) / (1 + lambda),
// psi(theta) = (-1)^k cos(m*theta) - 2k on theta in [k*pi/m, (k+1)*pi/m].
// A zero embedding scores 0 for every class by convention.
//
// x: [N,D], w: [classes,D]. labels only consulted in train mode.
template <class T>
Var<T> angle_linear(const Var<T>& x, const Var<T>& w, bool train,
                    const std::vector<int>& labels, int margin, T lambda) {
  const auto& xs = x->value.shape;
  const auto& ws = w->value.shape;
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1])
    throw DimensionError("angle_linear: shape mismatch");
  const int N = xs[0], D = xs[1], K = ws[0];
  if (train && static_cast<int>(labels.size()) != N)
    throw DataError("angle_linear: labels length != batch size");
  if (train)
    for (int l : labels)
      if (l < 0 || l >= K) throw DataError("angle_linear: label out of range");
  if (margin < 1 || margin > 4) throw ConfigError("angle_linear: margin m must be in 1..4");
  if (train && lambda < T(0)) throw ConfigError("angle_linear: negative lambda");

  // cached per-call quantities for the backward pass
  struct Cache {
    std::vector<T> wnorm;       // ||w_c||
    std::vector<T> xnorm;       // ||x_i||
    std::vector<T> u;           // N*K dot(x_i, w_c/||w_c||)
  };
  auto cache = std::make_shared<Cache>();
  cache->wnorm.resize(K);
  cache->xnorm.resize(N);
  cache->u.assign(static_cast<size_t>(N) * K, T(0));

  for (int c = 0; c < K; ++c) {
    T acc = T(0);
    const T* wc = w->value.ptr() + static_cast<int64_t>(c) * D;
    for (int d = 0; d < D; ++d) acc += wc[d] * wc[d];
    cache->wnorm[c] = std::sqrt(acc);
    if (cache->wnorm[c] == T(0)) throw NumericError("angle_linear: zero class weight vector");
  }
  Tensor<T> y({N, K});
  for (int i = 0; i < N; ++i) {
    const T* xi = x->value.ptr() + static_cast<int64_t>(i) * D;
    T racc = T(0);
    for (int d = 0; d < D; ++d) racc += xi[d] * xi[d];
    T r = std::sqrt(racc);
    cache->xnorm[i] = r;
    for (int c = 0; c < K; ++c) {
      const T* wc = w->value.ptr() + static_cast<int64_t>(c) * D;
      T dot = T(0);
      for (int d = 0; d < D; ++d) dot += xi[d] * wc[d];
      T u = dot / cache->wnorm[c];
      cache->u[static_cast<size_t>(i) * K + c] = u;
      if (r == T(0)) {
        y.data[static_cast<size_t>(i) * K + c] = T(0);
        continue;
      }
      if (train && labels[i] == c) {
        T cth = std::clamp(u / r, T(-1), T(1));
        T theta = std::acos(cth);
        int k = std::min(margin - 1, static_cast<int>(theta * margin / T(M_PI)));
        T sign = (k % 2 == 0) ? T(1) : T(-1);
        T psi = sign * detail::cos_m_theta(margin, cth) - T(2 * k);
        y.data[static_cast<size_t>(i) * K + c] = r * (lambda * cth + psi) / (T(1) + lambda);
      } else {
        y.data[static_cast<size_t>(i) * K + c] = u;
      }
    }
  }

  return make_node<T>(
      std::move(y), {x, w},
      [x, w, cache, train, labels, margin, lambda, N, D, K](VarNode<T>& nd) {
        for (int i = 0; i < N; ++i) {
          const T* xi = x->value.ptr() + static_cast<int64_t>(i) * D;
          const T r = cache->xnorm[i];
          if (r == T(0)) continue;  // scores pinned at 0
          for (int c = 0; c < K; ++c) {
            T gy = nd.grad.data[static_cast<size_t>(i) * K + c];
            if (gy == T(0)) continue;
            const T* wc = w->value.ptr() + static_cast<int64_t>(c) * D;
            const T wn = cache->wnorm[c];
            const T u = cache->u[static_cast<size_t>(i) * K + c];
            const bool margined = train && labels[i] == c;
            if (!margined) {
              // s = u = x . w/||w||
              if (x->requires_grad) {
                auto& gx = x->ensure_grad();
                T* dst = gx.ptr() + static_cast<int64_t>(i) * D;
                for (int d = 0; d < D; ++d) dst[d] += gy * wc[d] / wn;
              }
              if (w->requires_grad) {
                auto& gw = w->ensure_grad();
                T* dst = gw.ptr() + static_cast<int64_t>(c) * D;
                for (int d = 0; d < D; ++d)
                  dst[d] += gy * (xi[d] - u * wc[d] / wn) / wn;
              }
            } else {
              T cth = std::clamp(u / r, T(-1), T(1));
              T theta = std::acos(cth);
              int k = std::min(margin - 1, static_cast<int>(theta * margin / T(M_PI)));
              T sign = (k % 2 == 0) ? T(1) : T(-1);
              T gval = (lambda * cth + sign * detail::cos_m_theta(margin, cth) - T(2 * k)) /
                       (T(1) + lambda);
              T gprime =
                  (lambda + sign * detail::cos_m_theta_deriv(margin, cth)) / (T(1) + lambda);
              if (x->requires_grad) {
                auto& gx = x->ensure_grad();
                T* dst = gx.ptr() + static_cast<int64_t>(i) * D;
                // ds/dx = g(c)*x/r + g'(c)*(w_hat - c*x/r)
                for (int d = 0; d < D; ++d)
                  dst[d] += gy * (gval * xi[d] / r + gprime * (wc[d] / wn - cth * xi[d] / r));
              }
              if (w->requires_grad) {
                auto& gw = w->ensure_grad();
                T* dst = gw.ptr() + static_cast<int64_t>(c) * D;
                // ds/dw = g'(c) * (x - u*w_hat)/||w||
                for (int d = 0; d < D; ++d)
                  dst[d] += gy * gprime * (xi[d] - u * wc[d] / wn) / wn;
              }
            }
          }
        }
      });
}

// Mean softmax cross-entropy over score rows.
template <class T>
Var<T> cross_entropy(const Var<T>& scores, const std::vector<int>& labels) {
  const auto& s = scores->value.shape;
  if (s.size() != 2) throw DimensionError("cross_entropy: expected N x K scores");
  const int N = s[0], K = s[1];
  if (static_cast<int>(labels.size()) != N)
    throw DataError("cross_entropy: labels length != batch size");
  for (int l : labels)
    if (l < 0 || l >= K) throw DataError("cross_entropy: invalid label");
  auto softmax = std::make_shared<Tensor<T>>(Tensor<T>({N, K}));
  T loss = T(0);
  for (int i = 0; i < N; ++i) {
    const T* row = scores->value.ptr() + static_cast<int64_t>(i) * K;
    T mx = row[0];
    for (int c = 1; c < K; ++c) mx = std::max(mx, row[c]);
    T denom = T(0);
    for (int c = 0; c < K; ++c) denom += std::exp(row[c] - mx);
    T lse = mx + std::log(denom);
    loss += lse - row[labels[i]];
    for (int c = 0; c < K; ++c)
      softmax->data[static_cast<size_t>(i) * K + c] = std::exp(row[c] - lse);
  }
  Tensor<T> y({1});
  y.data[0] = loss / T(N);
  return make_node<T>(std::move(y), {scores}, [scores, softmax, labels, N, K](VarNode<T>& nd) {
    auto& gs = scores->ensure_grad();
    T g = nd.grad.data[0] / T(N);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < K; ++c) {
        T p = softmax->data[static_cast<size_t>(i) * K + c];
        gs.data[static_cast<size_t>(i) * K + c] += g * (p - (labels[i] == c ? T(1) : T(0)));
      }
  });
}

}  // namespace f0spoof

#endif  // F0SPOOF_LOSS_HPP
