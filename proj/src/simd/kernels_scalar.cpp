// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/simd/kernels.hpp"

namespace reczero::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_acc_scalar(const double* w, const double* x, double* y, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_scalar(w + r * cols, x, cols);
}

void gemv_t_acc_scalar(const double* w, const double* g, double* x_grad, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) x_grad[c] += row[c] * gr;
  }
}

void ger_acc_scalar(const double* g, const double* x, double* w_grad, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = w_grad + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot_scalar, gemv_acc_scalar, gemv_t_acc_scalar, ger_acc_scalar,
                                 axpy_scalar};
  return table;
}

}  // namespace reczero::simd
