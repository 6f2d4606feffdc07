// Scalar reference vs the vectorized kernels on awkward sizes.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "reczero/rng.hpp"
#include "reczero/simd/kernels.hpp"

using namespace reczero;
using namespace reczero::simd;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

// FMA changes rounding; sums of at most a few hundred O(1) products agree far
// tighter than this.
void close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
}

void compare(const KernelTable& ref, const KernelTable& fast) {
  Rng rng(11);
  for (std::size_t rows : {1u, 3u, 4u, 7u, 16u, 33u}) {
    for (std::size_t cols : {1u, 2u, 5u, 8u, 13u, 64u, 67u}) {
      const auto w = random_vec(rows * cols, rng);
      const auto x = random_vec(cols, rng);
      const auto g = random_vec(rows, rng);

      CHECK(std::abs(ref.dot(w.data(), w.data(), cols) - fast.dot(w.data(), w.data(), cols)) <
            1e-12);

      auto y1 = random_vec(rows, rng), y2 = y1;
      ref.gemv_acc(w.data(), x.data(), y1.data(), rows, cols);
      fast.gemv_acc(w.data(), x.data(), y2.data(), rows, cols);
      close(y1, y2);

      auto gx1 = random_vec(cols, rng), gx2 = gx1;
      ref.gemv_t_acc(w.data(), g.data(), gx1.data(), rows, cols);
      fast.gemv_t_acc(w.data(), g.data(), gx2.data(), rows, cols);
      close(gx1, gx2);

      auto gw1 = random_vec(rows * cols, rng), gw2 = gw1;
      ref.ger_acc(g.data(), x.data(), gw1.data(), rows, cols);
      fast.ger_acc(g.data(), x.data(), gw2.data(), rows, cols);
      close(gw1, gw2);

      auto a1 = random_vec(cols, rng), a2 = a1;
      ref.axpy(0.37, x.data(), a1.data(), cols);
      fast.axpy(0.37, x.data(), a2.data(), cols);
      close(a1, a2);
    }
  }
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  Rng rng(3);
  const std::size_t rows = 5, cols = 9;
  const auto w = random_vec(rows * cols, rng);
  const auto x = random_vec(cols, rng);
  std::vector<double> y(rows, 0.0), naive(rows, 0.0);
  scalar_kernels().gemv_acc(w.data(), x.data(), y.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) naive[r] += w[r * cols + c] * x[c];
  for (std::size_t r = 0; r < rows; ++r) CHECK(y[r] == doctest::Approx(naive[r]).epsilon(1e-14));
}

#if defined(RECZERO_HAVE_AVX2)
TEST_CASE("avx2 kernels agree with scalar") {
  if (!isa_available(Isa::avx2)) {
    MESSAGE("cpu lacks avx2+fma; skipped");
    return;
  }
  compare(scalar_kernels(), avx2_kernels());
}
#endif

#if defined(RECZERO_HAVE_NEON)
TEST_CASE("neon kernels agree with scalar") { compare(scalar_kernels(), neon_kernels()); }
#endif

TEST_CASE("dispatch can be forced to scalar and back") {
  const Isa before = active_isa();
  CHECK(set_active_isa(Isa::scalar));
  CHECK(active_isa() == Isa::scalar);
  CHECK(&kernels() == &scalar_kernels());
  CHECK(set_active_isa(before));
  CHECK(isa_name(Isa::scalar) == "scalar");
}
