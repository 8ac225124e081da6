// Copyright 2026 the f0spoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef F0SPOOF_GRADCHECK_HPP
#define F0SPOOF_GRADCHECK_HPP

#include <functional>

#include "f0spoof/autograd.hpp"

namespace f0spoof {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int kinks_skipped = 0;  // elements where the central difference is unstable
};

// Finite-difference check of a scalar-valued closure against the analytic
// gradients accumulated in `leaves`. The closure must rebuild the graph from
// the leaves' current values on every call (values are perturbed in place).
//
// Relative error: |analytic - fd| / max(1, |fd|). Elements whose central
// difference disagrees between step eps and eps/2 (a kink within the
// stencil, e.g. a ReLU crossing) are reported and skipped, not failed.
template <class T>
GradCheckResult grad_check_params(const std::function<Var<T>()>& scalar_fn,
                                  const std::vector<Var<T>>& leaves, T eps = T(1e-5)) {
  for (const auto& l : leaves) l->grad = Tensor<T>();
  auto out = scalar_fn();
  if (out->value.numel() != 1) throw DimensionError("grad_check: closure must produce a scalar");
  backward(out);

  GradCheckResult res;
  for (const auto& leaf : leaves) {
    Tensor<T> analytic =
        leaf->grad.shape == leaf->value.shape ? leaf->grad : Tensor<T>::zeros(leaf->value.shape);
    for (int64_t i = 0; i < leaf->value.numel(); ++i) {
      const T saved = leaf->value.data[i];
      auto eval_at = [&](T v) {
        leaf->value.data[i] = v;
        auto o = scalar_fn();
        leaf->value.data[i] = saved;
        return static_cast<double>(o->value.data[0]);
      };
      double fd = (eval_at(saved + eps) - eval_at(saved - eps)) / (2.0 * static_cast<double>(eps));
      double fd_half =
          (eval_at(saved + eps / 2) - eval_at(saved - eps / 2)) / static_cast<double>(eps);
      // For smooth ops fd and fd_half agree to O(eps^2 f'''); any larger gap
      // means a kink inside the stencil whose contaminated estimate could
      // otherwise pass as a small-but-real error.
      if (std::abs(fd - fd_half) > 1e-5 * std::max(1.0, std::abs(fd))) {
        ++res.kinks_skipped;
        continue;
      }
      double a = static_cast<double>(analytic.data[i]);
      double rel = std::abs(a - fd) / std::max(1.0, std::abs(fd));
      res.max_rel_error = std::max(res.max_rel_error, rel);
    }
  }
  return res;
}

// Convenience wrapper for checking an op's input gradient: the op output is
// scalarized via sum-of-outputs.
template <class T>
GradCheckResult grad_check(const std::function<Var<T>(const Var<T>&)>& op, Tensor<T> input,
                           T eps = T(1e-5)) {
  auto leaf = make_leaf(std::move(input), /*requires_grad=*/true);
  auto fn = [&op, leaf]() { return sum_all(op(leaf)); };
  return grad_check_params<T>(fn, {leaf}, eps);
}

}  // namespace f0spoof

#endif  // F0SPOOF_GRADCHECK_HPP
