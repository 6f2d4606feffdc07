// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Dense double-precision kernels used by the policy's forward and backward
// passes. Every kernel has a scalar reference implementation; AVX2+FMA (x86)
// and NEON (aarch64) variants are selected once at startup. All matrices are
// row-major.

#include <cstddef>
#include <string_view>

namespace reczero::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[r] += sum_c w[r*cols + c] * x[c]
  void (*gemv_acc)(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
  // x_grad[c] += sum_r w[r*cols + c] * g[r]
  void (*gemv_t_acc)(const double* w, const double* g, double* x_grad, std::size_t rows,
                     std::size_t cols);
  // w_grad[r*cols + c] += g[r] * x[c]
  void (*ger_acc)(const double* g, const double* x, double* w_grad, std::size_t rows,
                  std::size_t cols);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(RECZERO_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(RECZERO_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

// Variant compiled into this binary and supported by the running CPU.
bool isa_available(Isa isa);

// Active table. Chosen on first use: the best available ISA unless the
// RECZERO_SIMD environment variable names one ("scalar", "avx2", "neon").
const KernelTable& kernels();
Isa active_isa();

// Overrides the active table (tests, benchmarks). Returns false if the ISA is
// not available here.
bool set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace reczero::simd
