#include <cmath>
#include <vector>

#include "doctest.h"
#include "fd.hpp"
#include "reczero/errors.hpp"
#include "reczero/rng.hpp"
#include "reczero/tape.hpp"

using namespace reczero;

namespace {

std::vector<double> random_params(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(n);
  for (double& x : p) x = uniform01(rng) * 2.0 - 1.0;
  return p;
}

// Every differentiable op on one graph: embed -> affine -> gates -> attend ->
// log-softmax, plus the GRPO scalar terms.
double build(Tape& tape, const std::vector<double>& p, Var* out) {
  tape.reset(p);
  const Var e = tape.embed(0, 3, 2);                       // p[0..12) as 4x3
  const Var h0 = tape.param(12, 4);                        // p[12..16)
  const Var a = tape.affine(16, 4, 3, e, std::nullopt, 28);  // W 4x3 at 16, bias at 28
  const Var b = tape.affine(32, 4, 4, h0, a);              // 4x4 at 32
  const Var z = tape.sigmoid(b);
  const Var n = tape.tanh(tape.add(a, tape.mul(z, h0)));
  const Var h1 = tape.gru_blend(z, n, h0);
  const Var h2 = tape.fma(h1, z, n);
  std::vector<Var> keys{h0, h1, h2}, values{n, h1, tape.tanh(h2)};
  const Var ctx = tape.attend(tape.affine(48, 4, 4, h2), keys, values);
  const Var logits = tape.affine(64, 5, 4, ctx, std::nullopt, 84);
  const Var lp = tape.log_softmax_at(logits, 3);
  const Var lp2 = tape.log_softmax_at(logits, 1);
  const Var t1 = tape.clipped_ratio(lp, -1.4, 0.7, 0.2);
  const Var t2 = tape.kl_estimate(lp2, -1.1);
  const Var sq = tape.sum_squares(h2);
  const Var terms[] = {t1, t2, sq, lp};
  const double w[] = {1.0, -0.3, 0.05, 0.5};
  *out = tape.weighted_sum(terms, w);
  return tape.scalar(*out);
}

}  // namespace

TEST_CASE("tape gradient matches finite differences over every op") {
  const std::size_t n = 89;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = random_params(n, seed);
    for (double& x : p) x *= 0.5;
    Tape tape;
    Var loss;
    build(tape, p, &loss);
    const auto g = tape.backward(loss);
    const auto num = oracle::central_diff(
        [&](const std::vector<double>& q) {
          Tape t;
          Var l;
          return build(t, q, &l);
        },
        p);
    CHECK(oracle::relative_error(g, num) < 1e-7);
  }
}

TEST_CASE("attend is a convex combination of the values") {
  const std::vector<double> p{0.0};
  Tape tape(p);
  const double q[] = {1.0, 0.0};
  const double k1[] = {1.0, 0.0}, k2[] = {-1.0, 0.0};
  const double v1[] = {2.0, 0.0}, v2[] = {0.0, 4.0};
  const Var keys[] = {tape.constant(k1), tape.constant(k2)};
  const Var vals[] = {tape.constant(v1), tape.constant(v2)};
  const Var c = tape.attend(tape.constant(q), keys, vals);
  const double s = 1.0 / std::sqrt(2.0);
  const double a1 = std::exp(s) / (std::exp(s) + std::exp(-s));
  CHECK(tape.values(c)[0] == doctest::Approx(2.0 * a1));
  CHECK(tape.values(c)[1] == doctest::Approx(4.0 * (1.0 - a1)));
}

TEST_CASE("clipped ratio has zero gradient once saturated") {
  const std::vector<double> p{0.0, 0.0, 0.0};
  // logits = p; log-softmax at 0 is -ln 3. Old log-prob far below makes rho
  // large; with A > 0 the clip at 1 + eps binds.
  Tape tape(p);
  const Var lp = tape.log_softmax_at(tape.param(0, 3), 0);
  const Var t = tape.clipped_ratio(lp, -5.0, 1.0, 0.2);
  CHECK(tape.scalar(t) == doctest::Approx(1.2));
  const auto g = tape.backward(t);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("handles from an earlier recording are rejected") {
  const std::vector<double> p{1.0, 2.0};
  Tape tape(p);
  const Var old = tape.param(0, 2);
  tape.reset(p);
  CHECK_THROWS_AS(tape.sum_squares(old), TapeError);
  const Var v = tape.sum_squares(tape.param(0, 2));
  const auto g = tape.backward(v);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 4.0);
  CHECK(tape.consumed());
  CHECK_THROWS_AS(tape.backward(v), TapeError);
}

TEST_CASE("backward accumulates with scale") {
  const std::vector<double> p{3.0};
  Tape tape(p);
  const Var v = tape.sum_squares(tape.param(0, 1));
  std::vector<double> grad{1.0};
  tape.backward(v, grad, 0.5);
  CHECK(grad[0] == 4.0);
}
