// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace reczero {

enum class OptimizerKind { adam, sgd };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double max_grad_norm = 1.0;  // 0 disables global-norm clipping

  void validate() const;
};

struct OptimizerState {
  std::uint64_t t = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// Descends along `grad` (the gradient of a loss). Callers maximizing an
// objective pass its negated gradient.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t n);

  // Returns the gradient norm before clipping.
  double step(std::span<double> params, std::span<const double> grad);

  const OptimizerConfig& config() const { return config_; }
  const OptimizerState& state() const { return state_; }
  void set_state(OptimizerState state);

 private:
  OptimizerConfig config_;
  OptimizerState state_;
};

double l2_norm(std::span<const double> v);

}  // namespace reczero
