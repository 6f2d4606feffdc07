// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Group relative policy optimization over rule-based rewards.
//
// Per prompt: G rollouts from the frozen pre-step policy, rewards from the
// reward engine, group-standardized advantages broadcast to every token,
// and the clipped importance-weighted surrogate
//
//   J = 1/G sum_i 1/|y_i| sum_t [ min(rho A_i, clip(rho, 1-eps, 1+eps) A_i) - beta kl_t ]
//
// averaged over the prompts of a batch. One ascent step per batch.
//
// Determinism: each step draws one seed from the trainer RNG; prompt b of
// the batch samples from derive_seed(step_seed, "rollout", b). Per-prompt
// gradients are reduced in batch order, so results do not depend on the
// worker count.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "reczero/checkpoint.hpp"
#include "reczero/optimizer.hpp"
#include "reczero/policy.hpp"
#include "reczero/reward.hpp"
#include "reczero/rng.hpp"
#include "reczero/tape.hpp"
#include "reczero/tracelang.hpp"

namespace reczero {

enum class DegenerateGroupPolicy { zero_advantage };

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_coefficient = 0.0;
  OptimizerConfig optimizer{};
  int batch_size = 8;
  int epochs = 1;
  double temperature = 1.0;
  int max_new_tokens = 160;
  DegenerateGroupPolicy degenerate_group_policy = DegenerateGroupPolicy::zero_advantage;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: RECZERO_THREADS or hardware concurrency

  void validate() const;
  // Batch 8, lr 2e-6, 8 rollouts, temperature 1.0, 1 epoch, no KL.
  static GrpoConfig paper_preset();
};

// (R_i - mean) / std with the population standard deviation; all zeros when
// std < 1e-12. Throws ConfigError for fewer than two rewards.
std::vector<double> compute_advantages(
    std::span<const double> rewards,
    DegenerateGroupPolicy policy = DegenerateGroupPolicy::zero_advantage);

struct RolloutGroup {
  std::vector<TokenId> prompt;
  double ground_truth = 3.0;
  std::vector<Rollout> rollouts;  // logprobs recorded under the old policy
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;
  // Reference-policy log-probs per rollout token; needed when beta > 0.
  std::vector<std::vector<double>> ref_logprobs;
};

// Records the group surrogate on `tape` (reset here against params_new) and
// returns the objective node.
Var surrogate_objective(Tape& tape, const RolloutGroup& group, const PolicyParams& params_new,
                        const GrpoConfig& cfg);

struct StepReport {
  std::int64_t step = 0;
  double mean_reward = 0.0;
  double mean_format_reward = 0.0;
  double mean_answer_reward = 0.0;
  double format_valid_fraction = 0.0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double kl = 0.0;
  std::int64_t tokens_generated = 0;
  std::int64_t trajectories = 0;
  std::int64_t degenerate_groups = 0;
};

// Column order of the metrics stream.
const char* step_report_header();
std::string step_report_row(const StepReport& r);

struct TrainItem {
  std::vector<TokenId> prompt;
  double ground_truth = 3.0;
};

class GrpoTrainer {
 public:
  GrpoTrainer(PolicyParams params, GrpoConfig cfg, RewardConfig reward, TemplateMode mode,
              const Vocabulary& vocab, std::optional<PolicyParams> reference = std::nullopt);

  // One batch: sample, score, accumulate, update. Throws NumericsError on a
  // non-finite gradient, leaving the parameters unchanged.
  StepReport train_step(std::span<const TrainItem> batch);

  // Rollout groups for `batch` at the current parameters (no update).
  std::vector<RolloutGroup> collect(std::span<const TrainItem> batch, std::uint64_t step_seed) const;

  const PolicyParams& params() const { return params_; }
  const GrpoConfig& config() const { return cfg_; }
  std::int64_t step() const { return step_; }

  Checkpoint checkpoint(const Vocabulary& vocab) const;
  void restore(const Checkpoint& ckpt);

 private:
  PolicyParams params_;
  GrpoConfig cfg_;
  RewardConfig reward_;
  TemplateMode mode_;
  const Vocabulary& vocab_;
  std::optional<PolicyParams> reference_;
  Optimizer optimizer_;
  Rng rng_;
  std::int64_t step_ = 0;
};

struct TrainCallbacks {
  std::function<void(const StepReport&)> on_step;
  // Called before the first step (when starting from step 0) and after every
  // eval_interval steps.
  int eval_interval = 0;
  std::function<void(std::int64_t step, const PolicyParams&)> on_eval;
  int checkpoint_interval = 0;
  std::function<void(const GrpoTrainer&)> on_checkpoint;
  // Stop after this many total steps (-1: run the full schedule).
  std::int64_t stop_after = -1;
};

// epochs x ceil(|dataset| / batch) steps, continuing from trainer.step().
std::int64_t total_steps(std::size_t dataset_size, const GrpoConfig& cfg);
std::vector<StepReport> train(GrpoTrainer& trainer, std::span<const TrainItem> dataset,
                              const TrainCallbacks& callbacks);

// Indices of the examples in step `step` of the epoch schedule.
std::vector<std::size_t> batch_indices(std::size_t dataset_size, int batch_size, std::int64_t step,
                                       std::uint64_t seed);

int resolve_threads(int requested);

}  // namespace reczero
