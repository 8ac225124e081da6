// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_TENSOR_HPP
#define F0SPOOF_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "f0spoof/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace f0spoof {

namespace detail {

// Batched tensor ops allocate and free multi-megabyte buffers constantly.
// Keep them inside the heap instead of round-tripping pages through
// mmap/munmap; otherwise kernel fault handling dominates the run time.
inline const bool g_alloc_tuned = [] {
#if defined(__GLIBC__)
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
  return true;
}();

}  // namespace detail

// Dense row-major n-dimensional array. Activations use the canonical
// N x C x F x T layout.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), T(0));
  }
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw DimensionError("tensor data length does not match shape");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int e : s) {
      if (e < 0) throw DimensionError("negative tensor extent");
      n *= e;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, T v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor ones(std::vector<int> s) { return full(std::move(s), T(1)); }

  template <class Rng>
  static Tensor uniform(std::vector<int> s, Rng& rng, T lo, T hi) {
    Tensor t(std::move(s));
    std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
    for (auto& v : t.data) v = static_cast<T>(dist(rng));
    return t;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  T operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  // 4-D accessors for N x C x H x W activations.
  T& at4(int n, int c, int h, int w) {
    return data[(((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3]) + w];
  }
  T at4(int n, int c, int h, int w) const {
    return data[(((static_cast<size_t>(n) * shape[1] + c) * shape[2] + h) * shape[3]) + w];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
  }
};

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

}  // namespace f0spoof

#endif  // F0SPOOF_TENSOR_HPP
