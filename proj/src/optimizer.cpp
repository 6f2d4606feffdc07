// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/optimizer.hpp"

#include <cmath>
#include <string>

#include "reczero/errors.hpp"
#include "reczero/simd/kernels.hpp"

namespace reczero {

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'", "optimizer");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("must be > 0", "learning_rate");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("must lie in [0, 1)", "beta1");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("must lie in [0, 1)", "beta2");
  if (!(epsilon > 0.0)) throw ConfigError("must be > 0", "adam_epsilon");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("must be >= 0", "max_grad_norm");
}

double l2_norm(std::span<const double> v) {
  return std::sqrt(simd::kernels().dot(v.data(), v.data(), v.size()));
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t n) : config_(config) {
  config_.validate();
  if (config_.kind == OptimizerKind::adam) {
    state_.m.assign(n, 0.0);
    state_.v.assign(n, 0.0);
  }
}

void Optimizer::set_state(OptimizerState state) {
  if (config_.kind == OptimizerKind::adam && state.m.size() != state_.m.size()) {
    throw ConfigError("optimizer state does not match the parameter count", "checkpoint");
  }
  state_ = std::move(state);
}

double Optimizer::step(std::span<double> params, std::span<const double> grad) {
  const double norm = l2_norm(grad);
  double scale = 1.0;
  if (config_.max_grad_norm > 0.0 && norm > config_.max_grad_norm) {
    scale = config_.max_grad_norm / norm;
  }
  ++state_.t;
  if (config_.kind == OptimizerKind::sgd) {
    simd::kernels().axpy(-config_.learning_rate * scale, grad.data(), params.data(), params.size());
    return norm;
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i] * scale;
    state_.m[i] = b1 * state_.m[i] + (1.0 - b1) * g;
    state_.v[i] = b2 * state_.v[i] + (1.0 - b2) * g * g;
    const double mh = state_.m[i] / c1;
    const double vh = state_.v[i] / c2;
    params[i] -= config_.learning_rate * mh / (std::sqrt(vh) + config_.epsilon);
  }
  return norm;
}

}  // namespace reczero
