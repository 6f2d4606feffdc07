// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attention.hpp"
#include "reczero/errors.hpp"
#include "reczero/simd/kernels.hpp"

namespace reczero {

std::string_view cell_name(CellKind cell) {
  switch (cell) {
    case CellKind::gru: return "gru";
    case CellKind::rnn: return "rnn";
    case CellKind::attention: return "attention";
  }
  return "gru";
}

CellKind parse_cell(std::string_view name) {
  if (name == "gru") return CellKind::gru;
  if (name == "rnn") return CellKind::rnn;
  if (name == "attention") return CellKind::attention;
  throw ConfigError("unknown cell '" + std::string(name) + "'", "cell");
}

void PolicyDescriptor::validate() const {
  if (vocab_size <= 0) throw ConfigError("must be positive", "vocab_size");
  if (embed_dim <= 0) throw ConfigError("must be positive", "embed_dim");
  if (hidden_dim <= 0) throw ConfigError("must be positive", "hidden_dim");
  if (layers <= 0) throw ConfigError("must be positive", "layers");
  if (cell != CellKind::gru && cell != CellKind::rnn && cell != CellKind::attention)
    throw ConfigError("unknown cell", "cell");
  if (cell == CellKind::attention) {
    if (attention_dim <= 0) throw ConfigError("must be positive", "attention_dim");
    if (attention_heads <= 0) throw ConfigError("must be positive", "attention_heads");
  }
}

ParamLayout layout_of(const PolicyDescriptor& d) {
  d.validate();
  const auto V = static_cast<std::size_t>(d.vocab_size);
  const auto E = static_cast<std::size_t>(d.embed_dim);
  const auto H = static_cast<std::size_t>(d.hidden_dim);
  const int gates = d.cell == CellKind::rnn ? 1 : 3;
  ParamLayout L;
  std::size_t off = 0;
  L.embedding = off;
  off += V * E;
  for (int l = 0; l < d.layers; ++l) {
    LayerLayout layer;
    layer.in_dim = l == 0 ? d.embed_dim : d.hidden_dim;
    const auto I = static_cast<std::size_t>(layer.in_dim);
    for (int g = 0; g < gates; ++g) {
      layer.w[g] = off;
      off += H * I;
      layer.u[g] = off;
      off += H * H;
      layer.b[g] = off;
      off += H;
    }
    L.layers.push_back(layer);
  }
  L.out_w = off;
  off += V * H;
  L.out_b = off;
  off += V;
  if (d.cell == CellKind::attention) {
    const auto A = static_cast<std::size_t>(d.attention_dim);
    for (int h = 0; h < d.attention_heads; ++h) {
      HeadLayout head;
      head.q = off;
      off += A * H;
      head.k = off;
      off += A * H;
      head.v = off;
      off += A * H;
      head.out = off;
      off += V * A;
      for (int g = 0; g < 3; ++g) {
        head.feed[g] = off;
        off += H * A;
      }
      L.heads.push_back(head);
    }
  }
  L.total = off;
  return L;
}

std::size_t parameter_count(const PolicyDescriptor& d) { return layout_of(d).total; }

bool PolicyParams::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

PolicyParams init_policy(const PolicyDescriptor& descriptor, std::uint64_t seed) {
  const ParamLayout L = layout_of(descriptor);
  PolicyParams p;
  p.descriptor = descriptor;
  p.values.assign(L.total, 0.0);
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t count, double bound) {
    for (std::size_t i = 0; i < count; ++i) p.values[off + i] = bound * (2.0 * uniform01(rng) - 1.0);
  };
  const auto V = static_cast<std::size_t>(descriptor.vocab_size);
  const auto E = static_cast<std::size_t>(descriptor.embed_dim);
  const auto H = static_cast<std::size_t>(descriptor.hidden_dim);
  fill(L.embedding, V * E, 1.0);
  const int gates = descriptor.cell == CellKind::rnn ? 1 : 3;
  for (const LayerLayout& layer : L.layers) {
    const auto I = static_cast<std::size_t>(layer.in_dim);
    for (int g = 0; g < gates; ++g) {
      fill(layer.w[g], H * I, 1.0 / std::sqrt(static_cast<double>(I)));
      fill(layer.u[g], H * H, 1.0 / std::sqrt(static_cast<double>(H)));
    }
  }
  fill(L.out_w, V * H, 1.0 / std::sqrt(static_cast<double>(H)));
  const auto A = static_cast<std::size_t>(descriptor.attention_dim);
  for (const HeadLayout& head : L.heads) {
    fill(head.q, A * H, 1.0 / std::sqrt(static_cast<double>(H)));
    fill(head.k, A * H, 1.0 / std::sqrt(static_cast<double>(H)));
    fill(head.v, A * H, 1.0 / std::sqrt(static_cast<double>(H)));
    fill(head.out, V * A, 1.0 / std::sqrt(static_cast<double>(A)));
    for (int g = 0; g < 3; ++g) fill(head.feed[g], H * A, 1.0 / std::sqrt(static_cast<double>(A)));
  }
  return p;
}

void check_vocabulary(const PolicyDescriptor& descriptor, const Vocabulary& vocab) {
  if (descriptor.vocab_size != vocab.size()) {
    throw ConfigError("policy vocabulary size " + std::to_string(descriptor.vocab_size) +
                          " does not match the trace vocabulary (" + std::to_string(vocab.size()) +
                          ")",
                      "vocab_size");
  }
}

PolicyParams init_policy(const PolicyDescriptor& descriptor, std::uint64_t seed,
                         const Vocabulary& vocab) {
  check_vocabulary(descriptor, vocab);
  return init_policy(descriptor, seed);
}

void check_tokens(std::span<const TokenId> ids, int vocab_size) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_size) {
      throw UnknownTokenError("#" + std::to_string(ids[i]), i);
    }
  }
}

namespace {
inline double sigmoid_of(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double log_softmax_at(std::span<const double> l, std::size_t index) {
  double m = l[0];
  for (std::size_t i = 1; i < l.size(); ++i) m = std::max(m, l[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) s += std::exp(l[i] - m);
  const double lse = m + std::log(s);
  return l[index] - lse;
}

PolicyRunner::PolicyRunner(const PolicyParams& params)
    : params_(params), layout_(layout_of(params.descriptor)) {
  if (params.values.size() != layout_.total) throw ConfigError("parameter vector size mismatch");
  const auto H = static_cast<std::size_t>(params.descriptor.hidden_dim);
  const auto E = static_cast<std::size_t>(params.descriptor.embed_dim);
  x_.resize(std::max(H, E));
  z_.resize(H);
  r_.resize(H);
  n_.resize(H);
  un_.resize(H);
  logits_.resize(static_cast<std::size_t>(params.descriptor.vocab_size));
  q_.resize(static_cast<std::size_t>(params.descriptor.attention_dim));
}

PolicyState PolicyRunner::initial() const {
  PolicyState s;
  s.h.assign(layout_.layers.size(),
             std::vector<double>(static_cast<std::size_t>(params_.descriptor.hidden_dim), 0.0));
  const std::size_t heads = layout_.heads.size();
  s.keys.resize(heads);
  s.values.resize(heads);
  s.ctx.assign(heads, std::vector<double>(static_cast<std::size_t>(params_.descriptor.attention_dim), 0.0));
  return s;
}

void PolicyRunner::advance(PolicyState& state, TokenId token) {
  const auto& k = simd::kernels();
  const PolicyDescriptor& d = params_.descriptor;
  if (token < 0 || token >= d.vocab_size) throw UnknownTokenError("#" + std::to_string(token), 0);
  const double* P = params_.values.data();
  const auto H = static_cast<std::size_t>(d.hidden_dim);
  const auto E = static_cast<std::size_t>(d.embed_dim);
  const auto A = static_cast<std::size_t>(d.attention_dim);
  std::copy_n(P + layout_.embedding + static_cast<std::size_t>(token) * E, E, x_.begin());
  for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
    const LayerLayout& L = layout_.layers[l];
    const auto I = static_cast<std::size_t>(L.in_dim);
    double* h = state.h[l].data();
    // Input part of gate g: bias, input weights, then the fed-back reads.
    auto input_part = [&](int g, double* out) {
      std::copy_n(P + L.b[g], H, out);
      k.gemv_acc(P + L.w[g], x_.data(), out, H, I);
      if (l == 0) {
        for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd)
          k.gemv_acc(P + layout_.heads[hd].feed[g], state.ctx[hd].data(), out, H, A);
      }
    };
    if (d.cell != CellKind::rnn) {
      input_part(0, z_.data());
      k.gemv_acc(P + L.u[0], h, z_.data(), H, H);
      input_part(1, r_.data());
      k.gemv_acc(P + L.u[1], h, r_.data(), H, H);
      input_part(2, n_.data());
      std::fill(un_.begin(), un_.end(), 0.0);
      k.gemv_acc(P + L.u[2], h, un_.data(), H, H);
      for (std::size_t i = 0; i < H; ++i) {
        const double z = sigmoid_of(z_[i]);
        const double r = sigmoid_of(r_[i]);
        const double n = std::tanh(n_[i] + r * un_[i]);
        h[i] = (1.0 - z) * n + z * h[i];
      }
    } else {
      input_part(0, z_.data());
      k.gemv_acc(P + L.u[0], h, z_.data(), H, H);
      for (std::size_t i = 0; i < H; ++i) h[i] = std::tanh(z_[i]);
    }
    std::copy_n(h, H, x_.begin());
  }
  const double* top = state.h.back().data();
  for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd) {
    const HeadLayout& head = layout_.heads[hd];
    auto& keys = state.keys[hd];
    auto& values = state.values[hd];
    const std::size_t at = keys.size();
    keys.resize(at + A, 0.0);
    values.resize(at + A, 0.0);
    k.gemv_acc(P + head.k, top, keys.data() + at, A, H);
    k.gemv_acc(P + head.v, top, values.data() + at, A, H);
    std::fill(q_.begin(), q_.end(), 0.0);
    k.gemv_acc(P + head.q, top, q_.data(), A, H);
    const std::size_t count = keys.size() / A;
    scores_.resize(count);
    detail::attend_forward(
        q_.data(), count, A, [&](std::size_t j) { return keys.data() + j * A; },
        [&](std::size_t j) { return values.data() + j * A; }, scores_.data(),
        state.ctx[hd].data());
  }
}

std::span<const double> PolicyRunner::logits(const PolicyState& state) {
  const PolicyDescriptor& d = params_.descriptor;
  const double* P = params_.values.data();
  const auto V = static_cast<std::size_t>(d.vocab_size);
  const auto H = static_cast<std::size_t>(d.hidden_dim);
  const auto A = static_cast<std::size_t>(d.attention_dim);
  const auto& k = simd::kernels();
  std::copy_n(P + layout_.out_b, V, logits_.begin());
  k.gemv_acc(P + layout_.out_w, state.h.back().data(), logits_.data(), V, H);
  for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd)
    k.gemv_acc(P + layout_.heads[hd].out, state.ctx[hd].data(), logits_.data(), V, A);
  return logits_;
}

PolicyState PolicyRunner::consume(std::span<const TokenId> tokens) {
  PolicyState s = initial();
  for (TokenId t : tokens) advance(s, t);
  return s;
}

std::vector<double> log_probs(const PolicyParams& params, std::span<const TokenId> prompt,
                              std::span<const TokenId> output) {
  check_tokens(prompt, params.descriptor.vocab_size);
  check_tokens(output, params.descriptor.vocab_size);
  PolicyRunner runner(params);
  PolicyState s = runner.consume(prompt);
  std::vector<double> out;
  out.reserve(output.size());
  for (TokenId t : output) {
    out.push_back(log_softmax_at(runner.logits(s), static_cast<std::size_t>(t)));
    runner.advance(s, t);
  }
  return out;
}

namespace {

TokenId pick_token(std::span<const double> logits, const SampleOptions& opt, Rng& rng) {
  if (opt.greedy) {
    return static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double total = 0.0;
  thread_local std::vector<double> w;
  w.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp((logits[i] - m) / opt.temperature);
    total += w[i];
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  // u landed in the rounding slack above the last cumulative sum.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return static_cast<TokenId>(i);
  }
  return 0;
}

Rollout continue_from(PolicyRunner& runner, PolicyState state, std::span<const TokenId> prompt,
                      const SampleOptions& opt, Rng& rng) {
  Rollout r;
  r.prompt.assign(prompt.begin(), prompt.end());
  for (int step = 0; step < opt.max_new_tokens; ++step) {
    const auto logits = runner.logits(state);
    const TokenId t = pick_token(logits, opt, rng);
    r.tokens.push_back(t);
    r.logprobs.push_back(log_softmax_at(logits, static_cast<std::size_t>(t)));
    if (t == Vocabulary::kEos) {
      r.eos = true;
      break;
    }
    runner.advance(state, t);
  }
  return r;
}

void check_options(const SampleOptions& opt) {
  if (!opt.greedy && !(opt.temperature > 0.0)) throw ConfigError("must be > 0", "temperature");
  if (opt.max_new_tokens < 0) throw ConfigError("must be >= 0", "max_new_tokens");
}

}  // namespace

Rollout sample(const PolicyParams& params, std::span<const TokenId> prompt,
               const SampleOptions& options, Rng& rng) {
  check_options(options);
  check_tokens(prompt, params.descriptor.vocab_size);
  PolicyRunner runner(params);
  return continue_from(runner, runner.consume(prompt), prompt, options, rng);
}

std::vector<Rollout> sample_group(const PolicyParams& params, std::span<const TokenId> prompt,
                                  const SampleOptions& options, int count, Rng& rng) {
  check_options(options);
  check_tokens(prompt, params.descriptor.vocab_size);
  PolicyRunner runner(params);
  const PolicyState base = runner.consume(prompt);
  std::vector<Rollout> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(continue_from(runner, base, prompt, options, rng));
  return out;
}

TapedPolicy::TapedPolicy(Tape& tape, const PolicyParams& params)
    : tape_(tape), params_(params), layout_(layout_of(params.descriptor)) {
  if (params.values.size() != layout_.total) throw ConfigError("parameter vector size mismatch");
}

TapedPolicy::State TapedPolicy::initial() {
  State s;
  for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
    s.h.push_back(tape_.zeros(static_cast<std::size_t>(params_.descriptor.hidden_dim)));
  }
  const std::size_t heads = layout_.heads.size();
  s.keys.resize(heads);
  s.values.resize(heads);
  for (std::size_t hd = 0; hd < heads; ++hd)
    s.ctx.push_back(tape_.zeros(static_cast<std::size_t>(params_.descriptor.attention_dim)));
  return s;
}

TapedPolicy::State TapedPolicy::advance(const State& state, TokenId token) {
  const PolicyDescriptor& d = params_.descriptor;
  if (token < 0 || token >= d.vocab_size) throw UnknownTokenError("#" + std::to_string(token), 0);
  const auto H = static_cast<std::size_t>(d.hidden_dim);
  const auto E = static_cast<std::size_t>(d.embed_dim);
  const auto A = static_cast<std::size_t>(d.attention_dim);
  State next;
  Var x = tape_.embed(layout_.embedding, E, static_cast<std::size_t>(token));
  for (std::size_t l = 0; l < layout_.layers.size(); ++l) {
    const LayerLayout& L = layout_.layers[l];
    const auto I = static_cast<std::size_t>(L.in_dim);
    const Var h = state.h[l];
    auto input_part = [&](int g) {
      Var v = tape_.affine(L.w[g], H, I, x, std::nullopt, L.b[g]);
      if (l == 0) {
        for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd)
          v = tape_.affine(layout_.heads[hd].feed[g], H, A, state.ctx[hd], v);
      }
      return v;
    };
    Var h_new;
    if (d.cell != CellKind::rnn) {
      const Var z = tape_.sigmoid(tape_.affine(L.u[0], H, H, h, input_part(0)));
      const Var r = tape_.sigmoid(tape_.affine(L.u[1], H, H, h, input_part(1)));
      const Var wn = input_part(2);
      const Var un = tape_.affine(L.u[2], H, H, h);
      const Var n = tape_.tanh(tape_.fma(wn, r, un));
      h_new = tape_.gru_blend(z, n, h);
    } else {
      h_new = tape_.tanh(tape_.affine(L.u[0], H, H, h, input_part(0)));
    }
    next.h.push_back(h_new);
    x = h_new;
  }
  next.keys = state.keys;
  next.values = state.values;
  for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd) {
    const HeadLayout& head = layout_.heads[hd];
    next.keys[hd].push_back(tape_.affine(head.k, A, H, x));
    next.values[hd].push_back(tape_.affine(head.v, A, H, x));
    const Var q = tape_.affine(head.q, A, H, x);
    next.ctx.push_back(tape_.attend(q, next.keys[hd], next.values[hd]));
  }
  return next;
}

Var TapedPolicy::log_prob(const State& state, TokenId token) {
  const PolicyDescriptor& d = params_.descriptor;
  const auto V = static_cast<std::size_t>(d.vocab_size);
  const auto H = static_cast<std::size_t>(d.hidden_dim);
  const auto A = static_cast<std::size_t>(d.attention_dim);
  Var logits = tape_.affine(layout_.out_w, V, H, state.h.back(), std::nullopt, layout_.out_b);
  for (std::size_t hd = 0; hd < layout_.heads.size(); ++hd)
    logits = tape_.affine(layout_.heads[hd].out, V, A, state.ctx[hd], logits);
  return tape_.log_softmax_at(logits, static_cast<std::size_t>(token));
}

TapedPolicy::State TapedPolicy::consume(const State& state, std::span<const TokenId> tokens) {
  State s = state;
  for (TokenId t : tokens) s = advance(s, t);
  return s;
}

std::vector<Var> taped_log_probs(Tape& tape, const PolicyParams& params,
                                 std::span<const TokenId> prompt, std::span<const TokenId> output) {
  check_tokens(prompt, params.descriptor.vocab_size);
  check_tokens(output, params.descriptor.vocab_size);
  TapedPolicy policy(tape, params);
  TapedPolicy::State s = policy.consume(policy.initial(), prompt);
  std::vector<Var> out;
  out.reserve(output.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    out.push_back(policy.log_prob(s, output[i]));
    if (i + 1 < output.size()) s = policy.advance(s, output[i]);
  }
  return out;
}

}  // namespace reczero
