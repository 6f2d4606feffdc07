// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "reczero/simd/kernels.hpp"

namespace reczero::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_acc_neon(const double* w, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_neon(w + r * cols, x, cols);
}

void gemv_t_acc_neon(const double* w, const double* g, double* x_grad, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const float64x2_t gv = vdupq_n_f64(g[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2) {
      vst1q_f64(x_grad + c, vfmaq_f64(vld1q_f64(x_grad + c), vld1q_f64(row + c), gv));
    }
    for (; c < cols; ++c) x_grad[c] += row[c] * g[r];
  }
}

void ger_acc_neon(const double* g, const double* x, double* w_grad, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w_grad + r * cols;
    const float64x2_t gv = vdupq_n_f64(g[r]);
    std::size_t c = 0;
    for (; c + 2 <= cols; c += 2) {
      vst1q_f64(row + c, vfmaq_f64(vld1q_f64(row + c), gv, vld1q_f64(x + c)));
    }
    for (; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{dot_neon, gemv_acc_neon, gemv_t_acc_neon, ger_acc_neon,
                                 axpy_neon};
  return table;
}

}  // namespace reczero::simd
