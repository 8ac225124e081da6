// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_AUTOGRAD_HPP
#define F0SPOOF_AUTOGRAD_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "f0spoof/errors.hpp"
#include "f0spoof/tensor.hpp"

namespace f0spoof {

// ---------------------------------------------------------------------------
// Reverse-mode graph. Each op returns a new node holding its value, the list
// of parents and a closure that scatters the node's gradient into them.
// ---------------------------------------------------------------------------

template <class T>
struct VarNode;

template <class T>
using Var = std::shared_ptr<VarNode<T>>;

template <class T>
struct VarNode {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  std::vector<Var<T>> parents;
  std::function<void(VarNode<T>&)> backprop;

  Tensor<T>& ensure_grad() {
    if (grad.shape != value.shape) grad = Tensor<T>::zeros(value.shape);
    return grad;
  }
  void zero_grad() {
    if (grad.shape == value.shape) std::fill(grad.data.begin(), grad.data.end(), T(0));
  }
};

template <class T>
Var<T> make_leaf(Tensor<T> v, bool requires_grad = false) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

// Graph recording can be suspended (e.g. while scoring) so intermediate
// activations are freed as soon as they go out of scope.
inline thread_local bool g_grad_enabled = true;

struct NoGradGuard {
  bool prev = g_grad_enabled;
  NoGradGuard() { g_grad_enabled = false; }
  ~NoGradGuard() { g_grad_enabled = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class T>
Var<T> make_node(Tensor<T> v, std::vector<Var<T>> parents,
                 std::function<void(VarNode<T>&)> backprop) {
  auto n = std::make_shared<VarNode<T>>();
  n->value = std::move(v);
  if (g_grad_enabled) {
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
      if (p && p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
  }
  return n;
}

namespace detail {

template <class T>
void topo_visit(VarNode<T>* node, std::unordered_set<VarNode<T>*>& seen,
                std::vector<VarNode<T>*>& order) {
  if (!node || !node->requires_grad || seen.count(node)) return;
  seen.insert(node);
  for (const auto& p : node->parents) topo_visit(p.get(), seen, order);
  order.push_back(node);
}

}  // namespace detail

// Seeds the root gradient with ones and accumulates into every reachable
// leaf that requires a gradient. Accumulation is additive across calls.
// With release_graph (the default) each interior node's value and gradient
// are dropped as soon as its backprop has run — a node's value is only ever
// read by closures that run before it — which roughly halves peak memory on
// deep batched graphs. Pass false to keep the graph inspectable afterwards.
template <class T>
void backward(const Var<T>& root, bool release_graph = true) {
  if (!root->requires_grad) return;
  std::unordered_set<VarNode<T>*> seen;
  std::vector<VarNode<T>*> order;
  detail::topo_visit(root.get(), seen, order);
  auto& g = root->ensure_grad();
  std::fill(g.data.begin(), g.data.end(), T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VarNode<T>* node = *it;
    if (node->backprop) {
      node->backprop(*node);
      if (release_graph && node != root.get()) {
        node->value = Tensor<T>();
        node->grad = Tensor<T>();
        node->backprop = nullptr;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <class T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> y = x->value;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return make_node<T>(std::move(y), {x}, [x](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    const auto& xv = x->value.data;
    for (size_t i = 0; i < gx.data.size(); ++i)
      if (xv[i] > T(0)) gx.data[i] += n.grad.data[i];
  });
}

template <class T>
T stable_sigmoid(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  T e = std::exp(v);
  return e / (T(1) + e);
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> y = x->value;
  for (auto& v : y.data) v = stable_sigmoid(v);
  auto yv = std::make_shared<Tensor<T>>(y);
  return make_node<T>(std::move(y), {x}, [x, yv](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (size_t i = 0; i < gx.data.size(); ++i) {
      T s = yv->data[i];
      gx.data[i] += n.grad.data[i] * s * (T(1) - s);
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor<T> y = a->value;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += b->value.data[i];
  return make_node<T>(std::move(y), {a, b}, [a, b](VarNode<T>& n) {
    if (a->requires_grad) {
      auto& ga = a->ensure_grad();
      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += n.grad.data[i];
    }
    if (b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += n.grad.data[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T c) {
  Tensor<T> y = x->value;
  for (auto& v : y.data) v *= c;
  return make_node<T>(std::move(y), {x}, [x, c](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += c * n.grad.data[i];
  });
}

// Elementwise product with broadcasting of singleton extents in g
// (e.g. a 1xFxT spatial gate or a Cx1x1 channel gate over NxCxFxT).
template <class T>
Var<T> mul_bcast(const Var<T>& x, const Var<T>& g) {
  const auto& xs = x->value.shape;
  const auto& gs = g->value.shape;
  if (xs.size() != gs.size()) throw DimensionError("mul_bcast: rank mismatch");
  for (size_t i = 0; i < xs.size(); ++i)
    if (gs[i] != xs[i] && gs[i] != 1)
      throw DimensionError("mul_bcast: incompatible shapes " + x->value.shape_str() + " vs " +
                           g->value.shape_str());
  const int rank = static_cast<int>(xs.size());
  // strides of g mapped onto x's index space (0 where broadcast)
  std::vector<int64_t> gstride(rank, 0);
  {
    int64_t s = 1;
    for (int i = rank - 1; i >= 0; --i) {
      gstride[i] = (gs[i] == 1) ? 0 : s;
      s *= gs[i];
    }
  }
  std::vector<int64_t> xstride(rank, 0);
  {
    int64_t s = 1;
    for (int i = rank - 1; i >= 0; --i) {
      xstride[i] = s;
      s *= xs[i];
    }
  }
  // captured by value: the backprop closure outlives this frame
  auto map_index = [rank, xstride, gstride, xs](int64_t xi) {
    int64_t gi = 0;
    for (int d = 0; d < rank; ++d) {
      int64_t id = (xi / xstride[d]) % xs[d];
      gi += id * gstride[d];
    }
    return gi;
  };
  Tensor<T> y = x->value;
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] *= g->value.data[map_index(i)];
  return make_node<T>(std::move(y), {x, g}, [x, g, map_index](VarNode<T>& n) {
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      for (int64_t i = 0; i < gx.numel(); ++i)
        gx.data[i] += n.grad.data[i] * g->value.data[map_index(i)];
    }
    if (g->requires_grad) {
      auto& gg = g->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i)
        gg.data[map_index(i)] += n.grad.data[i] * x->value.data[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <class T>
Var<T> reshape(const Var<T>& x, std::vector<int> new_shape) {
  if (Tensor<T>::numel_of(new_shape) != x->value.numel())
    throw DimensionError("reshape: element count mismatch");
  Tensor<T> y(std::move(new_shape), x->value.data);
  return make_node<T>(std::move(y), {x}, [x](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += n.grad.data[i];
  });
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: empty input");
  const auto& s0 = parts[0]->value.shape;
  if (s0.size() != 4) throw DimensionError("concat_channels: expected 4-D tensors");
  int total_c = 0;
  for (const auto& p : parts) {
    const auto& s = p->value.shape;
    if (s.size() != 4 || s[0] != s0[0] || s[2] != s0[2] || s[3] != s0[3])
      throw DimensionError("concat_channels: incompatible shapes");
    total_c += s[1];
  }
  const int N = s0[0], H = s0[2], W = s0[3];
  const int64_t hw = static_cast<int64_t>(H) * W;
  Tensor<T> y({N, total_c, H, W});
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int c = p->value.shape[1];
    for (int n = 0; n < N; ++n)
      std::copy(p->value.data.begin() + n * c * hw, p->value.data.begin() + (n + 1) * c * hw,
                y.data.begin() + (static_cast<int64_t>(n) * total_c + off) * hw);
    off += c;
  }
  std::vector<Var<T>> parents(parts.begin(), parts.end());
  return make_node<T>(std::move(y), parents, [parts, offsets, N, total_c, hw](VarNode<T>& n) {
    for (size_t k = 0; k < parts.size(); ++k) {
      if (!parts[k]->requires_grad) continue;
      auto& gp = parts[k]->ensure_grad();
      const int c = parts[k]->value.shape[1];
      for (int b = 0; b < N; ++b) {
        const T* src = n.grad.data.data() + (static_cast<int64_t>(b) * total_c + offsets[k]) * hw;
        T* dst = gp.data.data() + static_cast<int64_t>(b) * c * hw;
        for (int64_t i = 0; i < c * hw; ++i) dst[i] += src[i];
      }
    }
  });
}

template <class T>
Var<T> narrow_channels(const Var<T>& x, int start, int len) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw DimensionError("narrow_channels: expected 4-D tensor");
  if (start < 0 || len <= 0 || start + len > s[1])
    throw DimensionError("narrow_channels: slice out of range");
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  const int64_t hw = static_cast<int64_t>(H) * W;
  Tensor<T> y({N, len, H, W});
  for (int n = 0; n < N; ++n)
    std::copy(x->value.data.begin() + (static_cast<int64_t>(n) * C + start) * hw,
              x->value.data.begin() + (static_cast<int64_t>(n) * C + start + len) * hw,
              y.data.begin() + static_cast<int64_t>(n) * len * hw);
  return make_node<T>(std::move(y), {x}, [x, start, len, N, C, hw](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (int b = 0; b < N; ++b) {
      const T* src = n.grad.data.data() + static_cast<int64_t>(b) * len * hw;
      T* dst = gx.data.data() + (static_cast<int64_t>(b) * C + start) * hw;
      for (int64_t i = 0; i < len * hw; ++i) dst[i] += src[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions / pooling
// ---------------------------------------------------------------------------

// N x C x F x T -> N x 1 x F x T (arithmetic mean over channels)
template <class T>
Var<T> channel_mean(const Var<T>& x) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw DimensionError("channel_mean: expected 4-D tensor");
  const int N = s[0], C = s[1];
  const int64_t hw = static_cast<int64_t>(s[2]) * s[3];
  Tensor<T> y({N, 1, s[2], s[3]});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T* src = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
      T* dst = y.data.data() + static_cast<int64_t>(n) * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] += src[i];
    }
  const T inv = T(1) / T(C);
  for (auto& v : y.data) v *= inv;
  return make_node<T>(std::move(y), {x}, [x, N, C, hw, inv](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < C; ++c) {
        const T* src = n.grad.data.data() + static_cast<int64_t>(b) * hw;
        T* dst = gx.data.data() + (static_cast<int64_t>(b) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) dst[i] += inv * src[i];
      }
  });
}

// Global average pooling: N x C x F x T -> N x C x 1 x 1
template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw DimensionError("global_avg_pool: expected 4-D tensor");
  const int64_t hw = static_cast<int64_t>(s[2]) * s[3];
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  const int N = s[0], C = s[1];
  Tensor<T> y({N, C, 1, 1});
  const T inv = T(1) / T(hw);
  for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
    const T* src = x->value.data.data() + nc * hw;
    T acc = T(0);
    for (int64_t i = 0; i < hw; ++i) acc += src[i];
    y.data[nc] = acc * inv;
  }
  return make_node<T>(std::move(y), {x}, [x, N, C, hw, inv](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
      T g = n.grad.data[nc] * inv;
      T* dst = gx.data.data() + nc * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] += g;
    }
  });
}

// Average pooling with padding counted in the divisor (constant k*k).
template <class T>
Var<T> avg_pool2d(const Var<T>& x, int k, int stride, int pad) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw DimensionError("avg_pool2d: expected 4-D tensor");
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  const int OH = (H + 2 * pad - k) / stride + 1;
  const int OW = (W + 2 * pad - k) / stride + 1;
  if (OH < 1 || OW < 1) throw ConfigError("avg_pool2d: empty output");
  Tensor<T> y({N, C, OH, OW});
  const T inv = T(1) / T(k * k);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          T acc = T(0);
          for (int kh = 0; kh < k; ++kh)
            for (int kw = 0; kw < k; ++kw) {
              int ih = oh * stride - pad + kh;
              int iw = ow * stride - pad + kw;
              if (ih >= 0 && ih < H && iw >= 0 && iw < W) acc += x->value.at4(n, c, ih, iw);
            }
          y.at4(n, c, oh, ow) = acc * inv;
        }
  return make_node<T>(std::move(y), {x}, [x, N, C, H, W, OH, OW, k, stride, pad, inv](VarNode<T>& nd) {
    auto& gx = x->ensure_grad();
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c)
        for (int oh = 0; oh < OH; ++oh)
          for (int ow = 0; ow < OW; ++ow) {
            T g = nd.grad.at4(n, c, oh, ow) * inv;
            for (int kh = 0; kh < k; ++kh)
              for (int kw = 0; kw < k; ++kw) {
                int ih = oh * stride - pad + kh;
                int iw = ow * stride - pad + kw;
                if (ih >= 0 && ih < H && iw >= 0 && iw < W) gx.at4(n, c, ih, iw) += g;
              }
          }
  });
}

template <class T>
Var<T> sum_all(const Var<T>& x) {
  T acc = T(0);
  for (T v : x->value.data) acc += v;
  Tensor<T> y({1});
  y.data[0] = acc;
  return make_node<T>(std::move(y), {x}, [x](VarNode<T>& n) {
    auto& gx = x->ensure_grad();
    T g = n.grad.data[0];
    for (auto& v : gx.data) v += g;
  });
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

template <class T>
using EigenRowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapRow = Eigen::Map<EigenRowMat<T>>;
template <class T>
using CMapRow = Eigen::Map<const EigenRowMat<T>>;

// x: [N,K], w: [M,K], b: [M] or null -> [N,M]
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const auto& xs = x->value.shape;
  const auto& ws = w->value.shape;
  if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[1])
    throw DimensionError("linear: shape mismatch");
  const int N = xs[0], K = xs[1], M = ws[0];
  if (b && (b->value.ndim() != 1 || b->value.dim(0) != M))
    throw DimensionError("linear: bias length mismatch");
  Tensor<T> y({N, M});
  CMapRow<T> X(x->value.ptr(), N, K);
  CMapRow<T> W(w->value.ptr(), M, K);
  MapRow<T> Y(y.ptr(), N, M);
  Y.noalias() = X * W.transpose();
  if (b)
    for (int n = 0; n < N; ++n)
      for (int m = 0; m < M; ++m) y.data[static_cast<size_t>(n) * M + m] += b->value.data[m];
  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_node<T>(std::move(y), parents, [x, w, b, N, K, M](VarNode<T>& nd) {
    CMapRow<T> G(nd.grad.ptr(), N, M);
    if (x->requires_grad) {
      auto& gx = x->ensure_grad();
      MapRow<T> GX(gx.ptr(), N, K);
      CMapRow<T> W(w->value.ptr(), M, K);
      GX.noalias() += G * W;
    }
    if (w->requires_grad) {
      auto& gw = w->ensure_grad();
      MapRow<T> GW(gw.ptr(), M, K);
      CMapRow<T> X(x->value.ptr(), N, K);
      GW.noalias() += G.transpose() * X;
    }
    if (b && b->requires_grad) {
      auto& gb = b->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) gb.data[m] += nd.grad.data[static_cast<size_t>(n) * M + m];
    }
  });
}

// ---------------------------------------------------------------------------
// Convolution (grouped, strided, dilated cross-correlation)
// ---------------------------------------------------------------------------

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kh = 1, kw = 1;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 0;
  int dil_h = 1, dil_w = 1;
  int groups = 1;

  void validate() const {
    if (in_channels <= 0 || out_channels <= 0 || kh <= 0 || kw <= 0 || stride_h <= 0 ||
        stride_w <= 0 || dil_h <= 0 || dil_w <= 0 || groups <= 0 || pad_h < 0 || pad_w < 0)
      throw ConfigError("conv: invalid spec");
    if (in_channels % groups != 0 || out_channels % groups != 0)
      throw ConfigError("conv: channels not divisible by groups");
  }
  int out_extent(int in, int k, int stride, int pad, int dil) const {
    int e = (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
    if (e < 1) throw ConfigError("conv: zero-size output");
    return e;
  }
};

namespace detail {

// col layout: [Cg*kh*kw, N*OH*OW] row-major, one group at a time.
template <class T>
void im2col(const Tensor<T>& x, const ConvSpec& sp, int group, int OH, int OW,
            std::vector<T>& col) {
  const int N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const int Cg = sp.in_channels / sp.groups;
  const int64_t M = static_cast<int64_t>(N) * OH * OW;
  col.assign(static_cast<size_t>(Cg) * sp.kh * sp.kw * M, T(0));
  (void)C;
  for (int c = 0; c < Cg; ++c) {
    const int ic = group * Cg + c;
    for (int kh = 0; kh < sp.kh; ++kh)
      for (int kw = 0; kw < sp.kw; ++kw) {
        T* row = col.data() + ((static_cast<int64_t>(c) * sp.kh + kh) * sp.kw + kw) * M;
        for (int n = 0; n < N; ++n) {
          const T* xc = x.data.data() +
                        (static_cast<int64_t>(n) * x.shape[1] + ic) * H * W;
          T* dst = row + static_cast<int64_t>(n) * OH * OW;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * sp.stride_h - sp.pad_h + kh * sp.dil_h;
            if (ih < 0 || ih >= H) {
              dst += OW;
              continue;
            }
            const T* xr = xc + static_cast<int64_t>(ih) * W;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * sp.stride_w - sp.pad_w + kw * sp.dil_w;
              *dst++ = (iw >= 0 && iw < W) ? xr[iw] : T(0);
            }
          }
        }
      }
  }
}

template <class T>
void col2im_accum(const std::vector<T>& col, const ConvSpec& sp, int group, int OH, int OW,
                  Tensor<T>& gx) {
  const int N = gx.shape[0], H = gx.shape[2], W = gx.shape[3];
  const int Cg = sp.in_channels / sp.groups;
  const int64_t M = static_cast<int64_t>(N) * OH * OW;
  for (int c = 0; c < Cg; ++c) {
    const int ic = group * Cg + c;
    for (int kh = 0; kh < sp.kh; ++kh)
      for (int kw = 0; kw < sp.kw; ++kw) {
        const T* row = col.data() + ((static_cast<int64_t>(c) * sp.kh + kh) * sp.kw + kw) * M;
        for (int n = 0; n < N; ++n) {
          T* xc = gx.data.data() + (static_cast<int64_t>(n) * gx.shape[1] + ic) * H * W;
          const T* src = row + static_cast<int64_t>(n) * OH * OW;
          for (int oh = 0; oh < OH; ++oh) {
            const int ih = oh * sp.stride_h - sp.pad_h + kh * sp.dil_h;
            if (ih < 0 || ih >= H) {
              src += OW;
              continue;
            }
            T* xr = xc + static_cast<int64_t>(ih) * W;
            for (int ow = 0; ow < OW; ++ow) {
              const int iw = ow * sp.stride_w - sp.pad_w + kw * sp.dil_w;
              T v = *src++;
              if (iw >= 0 && iw < W) xr[iw] += v;
            }
          }
        }
      }
  }
}

// Gather group output gradient [OCg, N*OH*OW] from [N,OC,OH,OW].
template <class T>
void gather_group(const Tensor<T>& t, int group, int OCg, int OH, int OW, std::vector<T>& out) {
  const int N = t.shape[0], OC = t.shape[1];
  const int64_t ohw = static_cast<int64_t>(OH) * OW;
  out.resize(static_cast<size_t>(OCg) * N * ohw);
  for (int oc = 0; oc < OCg; ++oc)
    for (int n = 0; n < N; ++n)
      std::copy(t.data.begin() + (static_cast<int64_t>(n) * OC + group * OCg + oc) * ohw,
                t.data.begin() + (static_cast<int64_t>(n) * OC + group * OCg + oc + 1) * ohw,
                out.begin() + (static_cast<int64_t>(oc) * N + n) * ohw);
}

template <class T>
void scatter_group(const std::vector<T>& src, int group, int OCg, int OH, int OW, Tensor<T>& t) {
  const int N = t.shape[0], OC = t.shape[1];
  const int64_t ohw = static_cast<int64_t>(OH) * OW;
  for (int oc = 0; oc < OCg; ++oc)
    for (int n = 0; n < N; ++n)
      std::copy(src.begin() + (static_cast<int64_t>(oc) * N + n) * ohw,
                src.begin() + (static_cast<int64_t>(oc) * N + n + 1) * ohw,
                t.data.begin() + (static_cast<int64_t>(n) * OC + group * OCg + oc) * ohw);
}

}  // namespace detail

// x: [N,Cin,H,W], w: [OC, Cin/groups, kh, kw], b: [OC] or null.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvSpec& sp) {
  sp.validate();
  const auto& xs = x->value.shape;
  if (xs.size() != 4) throw DimensionError("conv2d: expected 4-D input");
  if (xs[1] != sp.in_channels)
    throw DimensionError("conv2d: input channels " + std::to_string(xs[1]) + " != spec " +
                         std::to_string(sp.in_channels));
  const auto& ws = w->value.shape;
  if (ws.size() != 4 || ws[0] != sp.out_channels || ws[1] != sp.in_channels / sp.groups ||
      ws[2] != sp.kh || ws[3] != sp.kw)
    throw DimensionError("conv2d: weight shape mismatch");
  if (b && (b->value.ndim() != 1 || b->value.dim(0) != sp.out_channels))
    throw DimensionError("conv2d: bias length mismatch");
  const int N = xs[0], H = xs[2], W = xs[3];
  const int OH = sp.out_extent(H, sp.kh, sp.stride_h, sp.pad_h, sp.dil_h);
  const int OW = sp.out_extent(W, sp.kw, sp.stride_w, sp.pad_w, sp.dil_w);
  const int Cg = sp.in_channels / sp.groups;
  const int OCg = sp.out_channels / sp.groups;
  const int K = Cg * sp.kh * sp.kw;
  const int64_t M = static_cast<int64_t>(N) * OH * OW;
  Tensor<T> y({N, sp.out_channels, OH, OW});

  const bool pointwise = sp.kh == 1 && sp.kw == 1 && sp.stride_h == 1 && sp.stride_w == 1 &&
                         sp.pad_h == 0 && sp.pad_w == 0 && sp.groups == 1;
  if (pointwise) {
    // per-sample GEMM, no col buffer
    const int64_t hw = static_cast<int64_t>(H) * W;
    CMapRow<T> Wm(w->value.ptr(), sp.out_channels, sp.in_channels);
    for (int n = 0; n < N; ++n) {
      CMapRow<T> Xm(x->value.ptr() + static_cast<int64_t>(n) * sp.in_channels * hw,
                    sp.in_channels, hw);
      MapRow<T> Ym(y.ptr() + static_cast<int64_t>(n) * sp.out_channels * hw, sp.out_channels, hw);
      Ym.noalias() = Wm * Xm;
    }
  } else {
    std::vector<T> col;
    std::vector<T> out_g(static_cast<size_t>(OCg) * M);
    for (int g = 0; g < sp.groups; ++g) {
      detail::im2col(x->value, sp, g, OH, OW, col);
      CMapRow<T> Wm(w->value.ptr() + static_cast<int64_t>(g) * OCg * K, OCg, K);
      CMapRow<T> Cm(col.data(), K, M);
      MapRow<T> Om(out_g.data(), OCg, M);
      Om.noalias() = Wm * Cm;
      detail::scatter_group(out_g, g, OCg, OH, OW, y);
    }
  }
  if (b) {
    const int64_t ohw = static_cast<int64_t>(OH) * OW;
    for (int n = 0; n < N; ++n)
      for (int oc = 0; oc < sp.out_channels; ++oc) {
        T bv = b->value.data[oc];
        T* dst = y.data.data() + (static_cast<int64_t>(n) * sp.out_channels + oc) * ohw;
        for (int64_t i = 0; i < ohw; ++i) dst[i] += bv;
      }
  }

  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_node<T>(
      std::move(y), parents,
      [x, w, b, sp, N, H, W, OH, OW, Cg, OCg, K, M, pointwise](VarNode<T>& nd) {
        if (pointwise) {
          const int64_t hw = static_cast<int64_t>(H) * W;
          if (x->requires_grad) {
            auto& gx = x->ensure_grad();
            CMapRow<T> Wm(w->value.ptr(), sp.out_channels, sp.in_channels);
            for (int n = 0; n < N; ++n) {
              CMapRow<T> Gm(nd.grad.ptr() + static_cast<int64_t>(n) * sp.out_channels * hw,
                            sp.out_channels, hw);
              MapRow<T> GXm(gx.ptr() + static_cast<int64_t>(n) * sp.in_channels * hw,
                            sp.in_channels, hw);
              GXm.noalias() += Wm.transpose() * Gm;
            }
          }
          if (w->requires_grad) {
            auto& gw = w->ensure_grad();
            MapRow<T> GWm(gw.ptr(), sp.out_channels, sp.in_channels);
            for (int n = 0; n < N; ++n) {
              CMapRow<T> Gm(nd.grad.ptr() + static_cast<int64_t>(n) * sp.out_channels * hw,
                            sp.out_channels, hw);
              CMapRow<T> Xm(x->value.ptr() + static_cast<int64_t>(n) * sp.in_channels * hw,
                            sp.in_channels, hw);
              GWm.noalias() += Gm * Xm.transpose();
            }
          }
        } else {
          std::vector<T> col;
          std::vector<T> g_out;
          std::vector<T> g_col(static_cast<size_t>(K) * M);
          for (int g = 0; g < sp.groups; ++g) {
            detail::gather_group(nd.grad, g, OCg, OH, OW, g_out);
            CMapRow<T> Gm(g_out.data(), OCg, M);
            if (w->requires_grad) {
              detail::im2col(x->value, sp, g, OH, OW, col);
              CMapRow<T> Cm(col.data(), K, M);
              auto& gw = w->ensure_grad();
              MapRow<T> GWm(gw.ptr() + static_cast<int64_t>(g) * OCg * K, OCg, K);
              GWm.noalias() += Gm * Cm.transpose();
            }
            if (x->requires_grad) {
              CMapRow<T> Wm(w->value.ptr() + static_cast<int64_t>(g) * OCg * K, OCg, K);
              MapRow<T> GCm(g_col.data(), K, M);
              GCm.noalias() = Wm.transpose() * Gm;
              auto& gx = x->ensure_grad();
              detail::col2im_accum(g_col, sp, g, OH, OW, gx);
            }
          }
        }
        if (b && b->requires_grad) {
          auto& gb = b->ensure_grad();
          const int64_t ohw = static_cast<int64_t>(OH) * OW;
          for (int n = 0; n < N; ++n)
            for (int oc = 0; oc < sp.out_channels; ++oc) {
              const T* src =
                  nd.grad.data.data() + (static_cast<int64_t>(n) * sp.out_channels + oc) * ohw;
              T acc = T(0);
              for (int64_t i = 0; i < ohw; ++i) acc += src[i];
              gb.data[oc] += acc;
            }
        }
      });
}

// Shape-preserving dilated convolution on a single-channel map. Kernel must
// be odd so symmetric padding keeps the extent.
template <class T>
Var<T> depthwise_dilated_conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int k, int d) {
  if (k % 2 == 0) throw ConfigError("depthwise_dilated_conv2d: even kernel size");
  if (x->value.ndim() != 4 || x->value.dim(1) != 1)
    throw DimensionError("depthwise_dilated_conv2d: expected N x 1 x F x T input");
  ConvSpec sp;
  sp.in_channels = 1;
  sp.out_channels = 1;
  sp.kh = sp.kw = k;
  sp.dil_h = sp.dil_w = d;
  sp.pad_h = sp.pad_w = d * (k - 1) / 2;
  return conv2d(x, w, b, sp);
}

// Shape-preserving 1-D cross-correlation along the channel axis.
// x: [N,1,C], w: [1,1,1,k], b: [1] or null.
template <class T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int k) {
  if (k % 2 == 0) throw ConfigError("conv1d: even kernel size");
  if (x->value.ndim() != 3 || x->value.dim(1) != 1)
    throw DimensionError("conv1d: expected N x 1 x C input");
  const int N = x->value.dim(0), C = x->value.dim(2);
  auto x4 = reshape(x, {N, 1, 1, C});
  ConvSpec sp;
  sp.in_channels = 1;
  sp.out_channels = 1;
  sp.kh = 1;
  sp.kw = k;
  sp.pad_w = (k - 1) / 2;
  auto y4 = conv2d(x4, w, b, sp);
  return reshape(y4, {N, 1, C});
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

// Running stats live outside the graph; train mode updates them in place
// (unbiased variance for the running estimate, biased for normalization).
template <class T>
Var<T> batch_norm2d(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                    Tensor<T>* running_mean, Tensor<T>* running_var, bool train, T momentum,
                    T eps) {
  const auto& s = x->value.shape;
  if (s.size() != 4) throw DimensionError("batch_norm2d: expected 4-D tensor");
  const int N = s[0], C = s[1], H = s[2], W = s[3];
  if (gamma->value.numel() != C || beta->value.numel() != C)
    throw DimensionError("batch_norm2d: parameter length != C");
  if (running_mean->numel() != C || running_var->numel() != C)
    throw DimensionError("batch_norm2d: running stats length != C");
  const int64_t m = static_cast<int64_t>(N) * H * W;
  const int64_t hw = static_cast<int64_t>(H) * W;

  auto mean = std::make_shared<std::vector<T>>(C, T(0));
  auto inv_std = std::make_shared<std::vector<T>>(C, T(0));
  auto xhat = std::make_shared<Tensor<T>>();

  Tensor<T> y(s);
  if (train) {
    std::vector<T> var(C, T(0));
    for (int c = 0; c < C; ++c) {
      T acc = T(0);
      for (int n = 0; n < N; ++n) {
        const T* src = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) acc += src[i];
      }
      T mu = acc / T(m);
      T vacc = T(0);
      for (int n = 0; n < N; ++n) {
        const T* src = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          T d = src[i] - mu;
          vacc += d * d;
        }
      }
      (*mean)[c] = mu;
      var[c] = vacc / T(m);
      (*inv_std)[c] = T(1) / std::sqrt(var[c] + eps);
      running_mean->data[c] = (T(1) - momentum) * running_mean->data[c] + momentum * mu;
      T unbiased = m > 1 ? vacc / T(m - 1) : var[c];
      running_var->data[c] = (T(1) - momentum) * running_var->data[c] + momentum * unbiased;
    }
    *xhat = Tensor<T>(s);
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* src = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        T* xh = xhat->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        T* dst = y.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        T g = gamma->value.data[c], bt = beta->value.data[c];
        for (int64_t i = 0; i < hw; ++i) {
          xh[i] = (src[i] - (*mean)[c]) * (*inv_std)[c];
          dst[i] = g * xh[i] + bt;
        }
      }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mean)[c] = running_mean->data[c];
      (*inv_std)[c] = T(1) / std::sqrt(running_var->data[c] + eps);
    }
    for (int n = 0; n < N; ++n)
      for (int c = 0; c < C; ++c) {
        const T* src = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        T* dst = y.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        T g = gamma->value.data[c], bt = beta->value.data[c];
        for (int64_t i = 0; i < hw; ++i) dst[i] = g * (src[i] - (*mean)[c]) * (*inv_std)[c] + bt;
      }
  }

  return make_node<T>(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, mean, inv_std, xhat, train, N, C, hw, m](VarNode<T>& nd) {
        if (train) {
          // dx = gamma*inv_std*(dy - mean(dy) - xhat*mean(dy*xhat)), per channel
          for (int c = 0; c < C; ++c) {
            T sum_dy = T(0), sum_dy_xhat = T(0);
            for (int n = 0; n < N; ++n) {
              const T* gy = nd.grad.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
              const T* xh = xhat->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
              for (int64_t i = 0; i < hw; ++i) {
                sum_dy += gy[i];
                sum_dy_xhat += gy[i] * xh[i];
              }
            }
            if (gamma->requires_grad) gamma->ensure_grad().data[c] += sum_dy_xhat;
            if (beta->requires_grad) beta->ensure_grad().data[c] += sum_dy;
            if (x->requires_grad) {
              auto& gx = x->ensure_grad();
              T g = gamma->value.data[c] * (*inv_std)[c];
              T mdy = sum_dy / T(m);
              T mdyx = sum_dy_xhat / T(m);
              for (int n = 0; n < N; ++n) {
                const T* gy = nd.grad.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
                const T* xh = xhat->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
                T* dst = gx.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] += g * (gy[i] - mdy - xh[i] * mdyx);
              }
            }
          }
        } else {
          for (int c = 0; c < C; ++c) {
            T sum_dy = T(0), sum_dy_xhat = T(0);
            T g = gamma->value.data[c] * (*inv_std)[c];
            for (int n = 0; n < N; ++n) {
              const T* gy = nd.grad.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
              const T* xv = x->value.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
              for (int64_t i = 0; i < hw; ++i) {
                sum_dy += gy[i];
                sum_dy_xhat += gy[i] * (xv[i] - (*mean)[c]) * (*inv_std)[c];
              }
              if (x->requires_grad) {
                auto& gx = x->ensure_grad();
                T* dst = gx.data.data() + (static_cast<int64_t>(n) * C + c) * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] += g * gy[i];
              }
            }
            if (gamma->requires_grad) gamma->ensure_grad().data[c] += sum_dy_xhat;
            if (beta->requires_grad) beta->ensure_grad().data[c] += sum_dy;
          }
        }
      });
}

}  // namespace f0spoof

#endif  // F0SPOOF_AUTOGRAD_HPP
