// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode differentiation over vector-valued nodes. A Tape records the
// forward computation of a scalar loss against a flat parameter vector; one
// call to backward() returns d loss / d params and consumes the tape.
//
// Values live in one arena; operations are a closed set tailored to the
// recurrent policy plus the per-token GRPO terms, which keeps backward a
// tight switch over node kinds with no per-node allocation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace reczero {

class Tape;

// Handle to a node. Handles from a previous recording are rejected.
struct Var {
  std::uint32_t node = UINT32_MAX;
  std::uint32_t epoch = 0;
};

class Tape {
 public:
  Tape() = default;
  explicit Tape(std::span<const double> params) { reset(params); }

  // Starts a new recording against `params`; invalidates every earlier Var.
  // The parameter storage must stay alive and unchanged until backward().
  void reset(std::span<const double> params);

  // Leaves.
  Var constant(std::span<const double> values);
  Var zeros(std::size_t size);
  Var param(std::size_t offset, std::size_t size);

  // Row `row` of the parameter matrix at `offset` with `cols` columns.
  Var embed(std::size_t offset, std::size_t cols, std::size_t row);
  // base + W x, with W the rows x cols parameter matrix at w_offset. `base`
  // is either a Var of length rows or the parameter bias at bias_offset, or
  // zero when neither is given.
  Var affine(std::size_t w_offset, std::size_t rows, std::size_t cols, Var x,
             std::optional<Var> base = std::nullopt,
             std::optional<std::size_t> bias_offset = std::nullopt);

  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  // (1 - z) * n + z * h
  Var gru_blend(Var z, Var n, Var h);
  // a + r * b
  Var fma(Var a, Var r, Var b);
  // Causal attention read: softmax(q.k_j / sqrt(d)) weighted sum of values.
  Var attend(Var q, std::span<const Var> keys, std::span<const Var> values);

  // Scalars.
  Var log_softmax_at(Var logits, std::size_t index);
  // min(rho * A, clip(rho, 1-eps, 1+eps) * A) with rho = exp(logp - logp_old).
  Var clipped_ratio(Var logp, double logp_old, double advantage, double epsilon);
  // exp(ref - logp) - (ref - logp) - 1
  Var kl_estimate(Var logp, double logp_ref);
  Var weighted_sum(std::span<const Var> terms, std::span<const double> weights);
  Var sum_squares(Var a);

  double scalar(Var v) const;
  std::span<const double> values(Var v) const;
  std::size_t size(Var v) const;

  // Gradient of scalar `loss` w.r.t. the bound parameters, scaled and added
  // into `grad` (length = params size). Consumes the tape.
  void backward(Var loss, std::span<double> grad, double scale = 1.0);
  std::vector<double> backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    constant,
    param,
    embed,
    affine,
    add,
    mul,
    sigmoid,
    tanh,
    gru_blend,
    fma,
    attend,
    log_softmax_at,
    clipped_ratio,
    kl_estimate,
    weighted_sum,
    sum_squares,
  };

  struct Node {
    Op op;
    std::uint32_t a = UINT32_MAX, b = UINT32_MAX, c = UINT32_MAX;
    std::uint32_t size = 0;
    std::size_t val = 0;  // arena offset of the value
    std::size_t aux = 0;  // op-specific arena offset or list start
    std::size_t p0 = 0, p1 = 0;  // parameter offsets
    std::uint32_t rows = 0, cols = 0;
    double s0 = 0.0, s1 = 0.0;
    bool has_bias = false;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  std::size_t alloc(std::size_t n);
  double* vptr(std::uint32_t node) { return arena_.data() + nodes_[node].val; }
  const double* vptr(std::uint32_t node) const { return arena_.data() + nodes_[node].val; }

  std::span<const double> params_;
  std::vector<Node> nodes_;
  std::vector<double> arena_;
  std::vector<double> grads_;
  std::vector<std::uint32_t> lists_;
  std::vector<double> weights_;
  std::uint32_t epoch_ = 0;
  bool consumed_ = false;
};

}  // namespace reczero
