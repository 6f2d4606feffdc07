// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attention.hpp"
#include "reczero/errors.hpp"
#include "reczero/simd/kernels.hpp"

namespace reczero {

void Tape::reset(std::span<const double> params) {
  params_ = params;
  nodes_.clear();
  arena_.clear();
  lists_.clear();
  weights_.clear();
  ++epoch_;
  consumed_ = false;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.epoch != epoch_ || v.node >= nodes_.size()) {
    throw TapeError("variable does not belong to the current recording");
  }
  return nodes_[v.node];
}

std::size_t Tape::alloc(std::size_t n) {
  const std::size_t off = arena_.size();
  arena_.resize(off + n, 0.0);
  return off;
}

Var Tape::push(Node n) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  nodes_.push_back(n);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), epoch_};
}

Var Tape::constant(std::span<const double> values) {
  Node n{Op::constant};
  n.size = static_cast<std::uint32_t>(values.size());
  n.val = alloc(values.size());
  std::copy(values.begin(), values.end(), arena_.begin() + static_cast<std::ptrdiff_t>(n.val));
  return push(n);
}

Var Tape::zeros(std::size_t size) {
  Node n{Op::constant};
  n.size = static_cast<std::uint32_t>(size);
  n.val = alloc(size);
  return push(n);
}

Var Tape::param(std::size_t offset, std::size_t size) {
  if (offset + size > params_.size()) throw TapeError("parameter slice out of range");
  Node n{Op::param};
  n.size = static_cast<std::uint32_t>(size);
  n.p0 = offset;
  n.val = alloc(size);
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(offset), size,
              arena_.begin() + static_cast<std::ptrdiff_t>(n.val));
  return push(n);
}

Var Tape::embed(std::size_t offset, std::size_t cols, std::size_t row) {
  const std::size_t start = offset + row * cols;
  if (start + cols > params_.size()) throw TapeError("embedding row out of range");
  Node n{Op::embed};
  n.size = static_cast<std::uint32_t>(cols);
  n.p0 = start;
  n.val = alloc(cols);
  std::copy_n(params_.begin() + static_cast<std::ptrdiff_t>(start), cols,
              arena_.begin() + static_cast<std::ptrdiff_t>(n.val));
  return push(n);
}

Var Tape::affine(std::size_t w_offset, std::size_t rows, std::size_t cols, Var x,
                 std::optional<Var> base, std::optional<std::size_t> bias_offset) {
  const Node& nx = node(x);
  if (nx.size != cols) throw TapeError("affine: input size mismatch");
  if (w_offset + rows * cols > params_.size()) throw TapeError("affine: weights out of range");
  Node n{Op::affine};
  n.a = x.node;
  n.size = static_cast<std::uint32_t>(rows);
  n.rows = static_cast<std::uint32_t>(rows);
  n.cols = static_cast<std::uint32_t>(cols);
  n.p0 = w_offset;
  if (base) {
    if (node(*base).size != rows) throw TapeError("affine: base size mismatch");
    n.b = base->node;
  }
  if (bias_offset) {
    n.has_bias = true;
    n.p1 = *bias_offset;
  }
  n.val = alloc(rows);
  double* out = arena_.data() + n.val;
  if (base) {
    std::copy_n(arena_.data() + nodes_[base->node].val, rows, out);
  } else if (bias_offset) {
    std::copy_n(params_.data() + *bias_offset, rows, out);
  }
  simd::kernels().gemv_acc(params_.data() + w_offset, arena_.data() + nodes_[x.node].val, out, rows,
                           cols);
  return push(n);
}

namespace {
inline double sigmoid_of(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Var Tape::add(Var a, Var b) {
  const std::size_t len = node(a).size;
  if (node(b).size != len) throw TapeError("add: size mismatch");
  Node n{Op::add};
  n.a = a.node;
  n.b = b.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* x = vptr(a.node);
  const double* y = vptr(b.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = x[i] + y[i];
  return push(n);
}

Var Tape::mul(Var a, Var b) {
  const std::size_t len = node(a).size;
  if (node(b).size != len) throw TapeError("mul: size mismatch");
  Node n{Op::mul};
  n.a = a.node;
  n.b = b.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* x = vptr(a.node);
  const double* y = vptr(b.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = x[i] * y[i];
  return push(n);
}

Var Tape::sigmoid(Var a) {
  const std::size_t len = node(a).size;
  Node n{Op::sigmoid};
  n.a = a.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* x = vptr(a.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = sigmoid_of(x[i]);
  return push(n);
}

Var Tape::tanh(Var a) {
  const std::size_t len = node(a).size;
  Node n{Op::tanh};
  n.a = a.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* x = vptr(a.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = std::tanh(x[i]);
  return push(n);
}

Var Tape::gru_blend(Var z, Var nn, Var h) {
  const std::size_t len = node(z).size;
  if (node(nn).size != len || node(h).size != len) throw TapeError("gru_blend: size mismatch");
  Node n{Op::gru_blend};
  n.a = z.node;
  n.b = nn.node;
  n.c = h.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* zv = vptr(z.node);
  const double* nv = vptr(nn.node);
  const double* hv = vptr(h.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = (1.0 - zv[i]) * nv[i] + zv[i] * hv[i];
  return push(n);
}

Var Tape::fma(Var a, Var r, Var b) {
  const std::size_t len = node(a).size;
  if (node(r).size != len || node(b).size != len) throw TapeError("fma: size mismatch");
  Node n{Op::fma};
  n.a = a.node;
  n.b = r.node;
  n.c = b.node;
  n.size = static_cast<std::uint32_t>(len);
  n.val = alloc(len);
  const double* av = vptr(a.node);
  const double* rv = vptr(r.node);
  const double* bv = vptr(b.node);
  double* out = arena_.data() + n.val;
  for (std::size_t i = 0; i < len; ++i) out[i] = av[i] + rv[i] * bv[i];
  return push(n);
}

Var Tape::attend(Var q, std::span<const Var> keys, std::span<const Var> values) {
  const std::size_t d = node(q).size;
  const std::size_t count = keys.size();
  if (count == 0 || values.size() != count) throw TapeError("attend: empty or mismatched memory");
  Node n{Op::attend};
  n.a = q.node;
  n.size = static_cast<std::uint32_t>(d);
  n.rows = static_cast<std::uint32_t>(count);
  n.aux = lists_.size();
  for (Var k : keys) {
    if (node(k).size != d) throw TapeError("attend: key size mismatch");
    lists_.push_back(k.node);
  }
  for (Var v : values) {
    if (node(v).size != d) throw TapeError("attend: value size mismatch");
    lists_.push_back(v.node);
  }
  n.val = alloc(d + count);
  double* A = arena_.data();
  const std::uint32_t* L = lists_.data() + n.aux;
  detail::attend_forward(
      A + nodes_[q.node].val, count, d, [&](std::size_t j) { return A + nodes_[L[j]].val; },
      [&](std::size_t j) { return A + nodes_[L[count + j]].val; }, A + n.val + d, A + n.val);
  return push(n);
}

Var Tape::log_softmax_at(Var logits, std::size_t index) {
  const std::size_t len = node(logits).size;
  if (index >= len) throw TapeError("log_softmax_at: index out of range");
  Node n{Op::log_softmax_at};
  n.a = logits.node;
  n.size = 1;
  n.rows = static_cast<std::uint32_t>(index);
  n.val = alloc(1 + len);
  n.aux = n.val + 1;
  const double* l = vptr(logits.node);
  double m = l[0];
  for (std::size_t i = 1; i < len; ++i) m = std::max(m, l[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += std::exp(l[i] - m);
  const double lse = m + std::log(s);
  double* p = arena_.data() + n.aux;
  for (std::size_t i = 0; i < len; ++i) p[i] = std::exp(l[i] - lse);
  arena_[n.val] = l[index] - lse;
  return push(n);
}

Var Tape::clipped_ratio(Var logp, double logp_old, double advantage, double epsilon) {
  if (node(logp).size != 1) throw TapeError("clipped_ratio: scalar expected");
  Node n{Op::clipped_ratio};
  n.a = logp.node;
  n.size = 1;
  n.s0 = advantage;
  n.val = alloc(2);
  const double rho = std::exp(arena_[nodes_[logp.node].val] - logp_old);
  const double unclipped = rho * advantage;
  const double clipped = std::clamp(rho, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  // Ties take the unclipped branch, so the gradient flows whenever rho is
  // inside the trust region.
  const bool use_unclipped = unclipped <= clipped;
  arena_[n.val] = use_unclipped ? unclipped : clipped;
  arena_[n.val + 1] = use_unclipped ? rho : 0.0;
  return push(n);
}

Var Tape::kl_estimate(Var logp, double logp_ref) {
  if (node(logp).size != 1) throw TapeError("kl_estimate: scalar expected");
  Node n{Op::kl_estimate};
  n.a = logp.node;
  n.size = 1;
  n.val = alloc(2);
  const double d = logp_ref - arena_[nodes_[logp.node].val];
  const double e = std::exp(d);
  arena_[n.val] = e - d - 1.0;
  arena_[n.val + 1] = 1.0 - e;  // d value / d logp
  return push(n);
}

Var Tape::weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) throw TapeError("weighted_sum: length mismatch");
  Node n{Op::weighted_sum};
  n.size = 1;
  n.aux = lists_.size();
  n.p0 = weights_.size();
  n.rows = static_cast<std::uint32_t>(terms.size());
  n.val = alloc(1);
  double s = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (node(terms[i]).size != 1) throw TapeError("weighted_sum: scalar terms expected");
    lists_.push_back(terms[i].node);
    weights_.push_back(weights[i]);
    s += weights[i] * arena_[nodes_[terms[i].node].val];
  }
  arena_[n.val] = s;
  return push(n);
}

Var Tape::sum_squares(Var a) {
  const std::size_t len = node(a).size;
  Node n{Op::sum_squares};
  n.a = a.node;
  n.size = 1;
  n.val = alloc(1);
  const double* x = vptr(a.node);
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[i] * x[i];
  arena_[n.val] = s;
  return push(n);
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.size != 1) throw TapeError("not a scalar node");
  return arena_[n.val];
}

std::span<const double> Tape::values(Var v) const {
  const Node& n = node(v);
  return {arena_.data() + n.val, n.size};
}

std::size_t Tape::size(Var v) const { return node(v).size; }

std::vector<double> Tape::backward(Var loss) {
  std::vector<double> grad(params_.size(), 0.0);
  backward(loss, grad, 1.0);
  return grad;
}

void Tape::backward(Var loss, std::span<double> grad, double scale) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  const Node& ln = node(loss);
  if (ln.size != 1) throw TapeError("backward needs a scalar loss");
  if (grad.size() != params_.size()) throw TapeError("gradient buffer size mismatch");
  consumed_ = true;

  const auto& k = simd::kernels();
  grads_.assign(arena_.size(), 0.0);
  grads_[ln.val] = scale;
  double* G = grads_.data();
  const double* V = arena_.data();

  for (std::size_t idx = loss.node + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    double* g = G + n.val;
    switch (n.op) {
      case Op::constant:
        break;
      case Op::param:
      case Op::embed:
        for (std::size_t i = 0; i < n.size; ++i) grad[n.p0 + i] += g[i];
        break;
      case Op::affine: {
        const Node& x = nodes_[n.a];
        k.ger_acc(g, V + x.val, grad.data() + n.p0, n.rows, n.cols);
        k.gemv_t_acc(params_.data() + n.p0, g, G + x.val, n.rows, n.cols);
        if (n.b != UINT32_MAX) {
          k.axpy(1.0, g, G + nodes_[n.b].val, n.rows);
        } else if (n.has_bias) {
          k.axpy(1.0, g, grad.data() + n.p1, n.rows);
        }
        break;
      }
      case Op::add: {
        double* ga = G + nodes_[n.a].val;
        double* gb = G + nodes_[n.b].val;
        for (std::size_t i = 0; i < n.size; ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::mul: {
        const double* av = V + nodes_[n.a].val;
        const double* bv = V + nodes_[n.b].val;
        double* ga = G + nodes_[n.a].val;
        double* gb = G + nodes_[n.b].val;
        for (std::size_t i = 0; i < n.size; ++i) {
          ga[i] += g[i] * bv[i];
          gb[i] += g[i] * av[i];
        }
        break;
      }
      case Op::sigmoid: {
        const double* y = V + n.val;
        double* ga = G + nodes_[n.a].val;
        for (std::size_t i = 0; i < n.size; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::tanh: {
        const double* y = V + n.val;
        double* ga = G + nodes_[n.a].val;
        for (std::size_t i = 0; i < n.size; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::gru_blend: {
        const double* z = V + nodes_[n.a].val;
        const double* nv = V + nodes_[n.b].val;
        const double* h = V + nodes_[n.c].val;
        double* gz = G + nodes_[n.a].val;
        double* gn = G + nodes_[n.b].val;
        double* gh = G + nodes_[n.c].val;
        for (std::size_t i = 0; i < n.size; ++i) {
          gz[i] += g[i] * (h[i] - nv[i]);
          gn[i] += g[i] * (1.0 - z[i]);
          gh[i] += g[i] * z[i];
        }
        break;
      }
      case Op::fma: {
        const double* r = V + nodes_[n.b].val;
        const double* b = V + nodes_[n.c].val;
        double* ga = G + nodes_[n.a].val;
        double* gr = G + nodes_[n.b].val;
        double* gb = G + nodes_[n.c].val;
        for (std::size_t i = 0; i < n.size; ++i) {
          ga[i] += g[i];
          gr[i] += g[i] * b[i];
          gb[i] += g[i] * r[i];
        }
        break;
      }
      case Op::attend: {
        const std::size_t d = n.size;
        const std::size_t count = n.rows;
        const std::uint32_t* L = lists_.data() + n.aux;
        const double* alpha = V + n.val + d;
        const double* q = V + nodes_[n.a].val;
        double* gq = G + nodes_[n.a].val;
        const double inv = 1.0 / std::sqrt(static_cast<double>(d));
        thread_local std::vector<double> ga;
        ga.resize(count);
        double total = 0.0;
        for (std::size_t j = 0; j < count; ++j) {
          ga[j] = k.dot(g, V + nodes_[L[count + j]].val, d);
          total += alpha[j] * ga[j];
        }
        for (std::size_t j = 0; j < count; ++j) {
          const double gs = alpha[j] * (ga[j] - total) * inv;
          k.axpy(gs, V + nodes_[L[j]].val, gq, d);
          k.axpy(gs, q, G + nodes_[L[j]].val, d);
          k.axpy(alpha[j], g, G + nodes_[L[count + j]].val, d);
        }
        break;
      }
      case Op::log_softmax_at: {
        const Node& l = nodes_[n.a];
        const double* p = V + n.aux;
        double* gl = G + l.val;
        const double gv = g[0];
        for (std::size_t i = 0; i < l.size; ++i) gl[i] -= gv * p[i];
        gl[n.rows] += gv;
        break;
      }
      case Op::clipped_ratio:
        // d/dlogp (rho * A) = rho * A; the clipped branch is constant.
        G[nodes_[n.a].val] += g[0] * V[n.val + 1] * n.s0;
        break;
      case Op::kl_estimate:
        G[nodes_[n.a].val] += g[0] * V[n.val + 1];
        break;
      case Op::weighted_sum:
        for (std::size_t i = 0; i < n.rows; ++i) {
          G[nodes_[lists_[n.aux + i]].val] += g[0] * weights_[n.p0 + i];
        }
        break;
      case Op::sum_squares: {
        const double* x = V + nodes_[n.a].val;
        double* gx = G + nodes_[n.a].val;
        for (std::size_t i = 0; i < nodes_[n.a].size; ++i) gx[i] += 2.0 * g[0] * x[i];
        break;
      }
    }
  }
}

}  // namespace reczero
