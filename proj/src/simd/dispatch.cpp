// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "reczero/simd/kernels.hpp"

namespace reczero::simd {
namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_kernels();
    case Isa::avx2:
#if defined(RECZERO_HAVE_AVX2)
      return &avx2_kernels();
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(RECZERO_HAVE_NEON)
      return &neon_kernels();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa pick_default() {
  if (const char* env = std::getenv("RECZERO_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
    if (want == "neon" && isa_available(Isa::neon)) return Isa::neon;
  }
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct Active {
  Isa isa;
  std::atomic<const KernelTable*> table;
  Active() : isa(pick_default()), table(table_for(isa)) {}
};

Active& active() {
  static Active a;
  return a;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(RECZERO_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(RECZERO_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels() { return *active().table.load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

bool set_active_isa(Isa isa) {
  if (!isa_available(isa)) return false;
  active().isa = isa;
  active().table.store(table_for(isa), std::memory_order_relaxed);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace reczero::simd
