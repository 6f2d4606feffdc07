// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Causal single-head attention read shared by the tape and the runner so both
// paths perform the same floating-point operations in the same order.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "reczero/simd/kernels.hpp"

namespace reczero::detail {

// key(j) / value(j) return pointers to rows of length d. Writes the
// attention weights to alpha[0..n) and the context to ctx[0..d).
template <class KeyAt, class ValueAt>
void attend_forward(const double* q, std::size_t n, std::size_t d, KeyAt key, ValueAt value,
                    double* alpha, double* ctx) {
  const auto& k = simd::kernels();
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  double m = -INFINITY;
  for (std::size_t j = 0; j < n; ++j) {
    alpha[j] = k.dot(q, key(j), d) * inv;
    m = std::max(m, alpha[j]);
  }
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    alpha[j] = std::exp(alpha[j] - m);
    s += alpha[j];
  }
  std::fill(ctx, ctx + d, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    alpha[j] /= s;
    k.axpy(alpha[j], value(j), ctx, d);
  }
}

}  // namespace reczero::detail
