// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Micro autoregressive policy over the trace vocabulary: token embedding,
// a stack of recurrent cells (gated or plain tanh), and a softmax readout.
// The attention cell keeps the gated stack and adds causal attention heads
// over all top-layer states so far. Each head's read goes into the logits and
// is fed back into the first layer's gates at the next step:
//
//   q = Wq h_t,  k_j = Wk h_j,  v_j = Wv h_j (j <= t)
//   c_t = sum_j softmax_j(q.k_j / sqrt(d)) v_j
//   logits_t = Wo h_t + sum_heads Wc c_t + bo
//   the gates at t+1 see [x_{t+1}; c_t]
//
// Two forward paths share one arithmetic sequence: PolicyRunner (no tape;
// sampling, scoring, evaluation) and TapedPolicy (records onto a Tape for
// exact gradients). Both produce bit-identical log-probabilities.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "reczero/rng.hpp"
#include "reczero/tape.hpp"
#include "reczero/tracelang.hpp"

namespace reczero {

enum class CellKind { gru, rnn, attention };

std::string_view cell_name(CellKind cell);
CellKind parse_cell(std::string_view name);

struct PolicyDescriptor {
  int vocab_size = 0;
  int embed_dim = 32;
  int hidden_dim = 64;
  int layers = 1;
  CellKind cell = CellKind::attention;
  int attention_heads = 2;  // attention cell only
  int attention_dim = 16;   // per head

  void validate() const;  // throws ConfigError
  friend bool operator==(const PolicyDescriptor&, const PolicyDescriptor&) = default;
};

struct LayerLayout {
  int in_dim = 0;
  // Gate order for gru: update (z), reset (r), candidate (n). rnn uses gate 0.
  std::size_t w[3] = {0, 0, 0};
  std::size_t u[3] = {0, 0, 0};
  std::size_t b[3] = {0, 0, 0};
};

struct HeadLayout {
  std::size_t q = 0, k = 0, v = 0;  // d x hidden each
  std::size_t out = 0;              // vocab x d
  std::size_t feed[3] = {0, 0, 0};  // hidden x d per gate of the first layer
};

struct ParamLayout {
  std::size_t embedding = 0;
  std::vector<LayerLayout> layers;
  std::size_t out_w = 0;
  std::size_t out_b = 0;
  std::vector<HeadLayout> heads;  // attention cell only
  std::size_t total = 0;
};

ParamLayout layout_of(const PolicyDescriptor& d);
std::size_t parameter_count(const PolicyDescriptor& d);

struct PolicyParams {
  PolicyDescriptor descriptor;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool finite() const;
};

// Weights uniform in +-1/sqrt(fan_in), embeddings uniform in +-1, biases zero.
PolicyParams init_policy(const PolicyDescriptor& descriptor, std::uint64_t seed);
// As above; throws ConfigError if descriptor.vocab_size disagrees with `vocab`.
PolicyParams init_policy(const PolicyDescriptor& descriptor, std::uint64_t seed,
                         const Vocabulary& vocab);
void check_vocabulary(const PolicyDescriptor& descriptor, const Vocabulary& vocab);

struct Rollout {
  std::vector<TokenId> prompt;
  std::vector<TokenId> tokens;   // generated, including a final <eos> if sampled
  std::vector<double> logprobs;  // log pi(token | prefix) at temperature 1
  bool eos = false;
};

struct SampleOptions {
  double temperature = 1.0;
  int max_new_tokens = 160;
  bool greedy = false;  // argmax decoding, the temperature -> 0 limit
};

// Recurrent state: one hidden vector per layer.
struct PolicyState {
  std::vector<std::vector<double>> h;
  // Attention, per head: key and value rows of every consumed token, and the
  // current read.
  std::vector<std::vector<double>> keys;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> ctx;
};

class PolicyRunner {
 public:
  explicit PolicyRunner(const PolicyParams& params);

  PolicyState initial() const;
  void advance(PolicyState& state, TokenId token);
  // Next-token logits for `state` (length vocab_size), valid until the next call.
  std::span<const double> logits(const PolicyState& state);
  PolicyState consume(std::span<const TokenId> tokens);

  const PolicyParams& params() const { return params_; }

 private:
  const PolicyParams& params_;
  ParamLayout layout_;
  std::vector<double> x_, z_, r_, n_, un_, logits_, q_, scores_;
};

// log(softmax(logits))[index] computed exactly as the tape does.
double log_softmax_at(std::span<const double> logits, std::size_t index);

// Per-token log-probs of `output` following `prompt`. Throws UnknownTokenError
// for ids outside the vocabulary.
std::vector<double> log_probs(const PolicyParams& params, std::span<const TokenId> prompt,
                              std::span<const TokenId> output);

Rollout sample(const PolicyParams& params, std::span<const TokenId> prompt,
               const SampleOptions& options, Rng& rng);

// `count` rollouts sharing one pass over the prompt.
std::vector<Rollout> sample_group(const PolicyParams& params, std::span<const TokenId> prompt,
                                  const SampleOptions& options, int count, Rng& rng);

// Records the forward computation on a tape.
class TapedPolicy {
 public:
  struct State {
    std::vector<Var> h;
    std::vector<std::vector<Var>> keys;
    std::vector<std::vector<Var>> values;
    std::vector<Var> ctx;
  };

  TapedPolicy(Tape& tape, const PolicyParams& params);

  State initial();
  State advance(const State& state, TokenId token);
  Var log_prob(const State& state, TokenId token);
  State consume(const State& state, std::span<const TokenId> tokens);

 private:
  Tape& tape_;
  const PolicyParams& params_;
  ParamLayout layout_;
};

// Teacher-forced log-probs of `output` after `prompt`, recorded on `tape`
// (reset by the caller against params.values).
std::vector<Var> taped_log_probs(Tape& tape, const PolicyParams& params,
                                 std::span<const TokenId> prompt, std::span<const TokenId> output);

void check_tokens(std::span<const TokenId> ids, int vocab_size);

}  // namespace reczero
