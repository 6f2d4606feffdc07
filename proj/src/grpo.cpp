// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "reczero/errors.hpp"
#include "reczero/parallel.hpp"

namespace reczero {

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("must be >= 2", "group_size");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("must lie in (0, 1)", "clip_epsilon");
  if (!(kl_coefficient >= 0.0)) throw ConfigError("must be >= 0", "kl_coefficient");
  if (batch_size < 1) throw ConfigError("must be >= 1", "batch_size");
  if (epochs < 1) throw ConfigError("must be >= 1", "epochs");
  if (!(temperature > 0.0)) throw ConfigError("must be > 0", "temperature");
  if (max_new_tokens < 1) throw ConfigError("must be >= 1", "max_new_tokens");
  if (threads < 0) throw ConfigError("must be >= 0", "threads");
  optimizer.validate();
}

GrpoConfig GrpoConfig::paper_preset() {
  GrpoConfig c;
  c.batch_size = 8;
  c.group_size = 8;
  c.temperature = 1.0;
  c.epochs = 1;
  c.kl_coefficient = 0.0;
  c.optimizer.learning_rate = 2e-6;
  return c;
}

std::vector<double> compute_advantages(std::span<const double> rewards, DegenerateGroupPolicy) {
  if (rewards.size() < 2) throw ConfigError("a group needs at least two rollouts", "group_size");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < 1e-12) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

Var surrogate_objective(Tape& tape, const RolloutGroup& group, const PolicyParams& params_new,
                        const GrpoConfig& cfg) {
  const bool use_kl = cfg.kl_coefficient > 0.0;
  if (group.rollouts.size() != group.advantages.size())
    throw ConfigError("advantages do not match rollouts", "group_size");
  if (use_kl && group.ref_logprobs.size() != group.rollouts.size())
    throw ConfigError("reference log-probs missing", "kl_coefficient");
  tape.reset(params_new.values);
  TapedPolicy pol(tape, params_new);
  const auto prefix = pol.consume(pol.initial(), group.prompt);
  const double G = static_cast<double>(group.rollouts.size());
  std::vector<Var> terms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
    const Rollout& ro = group.rollouts[i];
    if (ro.tokens.empty()) continue;
    const double w = 1.0 / (G * static_cast<double>(ro.tokens.size()));
    auto state = prefix;
    for (std::size_t t = 0; t < ro.tokens.size(); ++t) {
      Var lp = pol.log_prob(state, ro.tokens[t]);
      terms.push_back(tape.clipped_ratio(lp, ro.logprobs[t], group.advantages[i], cfg.clip_epsilon));
      weights.push_back(w);
      if (use_kl) {
        terms.push_back(tape.kl_estimate(lp, group.ref_logprobs[i][t]));
        weights.push_back(-cfg.kl_coefficient * w);
      }
      if (t + 1 < ro.tokens.size()) state = pol.advance(state, ro.tokens[t]);
    }
  }
  return tape.weighted_sum(terms, weights);
}

const char* step_report_header() {
  return "step,mean_reward,mean_format_reward,mean_answer_reward,format_valid_fraction,objective,"
         "grad_norm,kl,tokens_generated,degenerate_groups";
}

std::string step_report_row(const StepReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.step << ',' << r.mean_reward << ',' << r.mean_format_reward << ',' << r.mean_answer_reward
     << ',' << r.format_valid_fraction << ',' << r.objective << ',' << r.grad_norm << ',' << r.kl
     << ',' << r.tokens_generated << ',' << r.degenerate_groups;
  return os.str();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RECZERO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

GrpoTrainer::GrpoTrainer(PolicyParams params, GrpoConfig cfg, RewardConfig reward, TemplateMode mode,
                         const Vocabulary& vocab, std::optional<PolicyParams> reference)
    : params_(std::move(params)),
      cfg_(cfg),
      reward_(reward),
      mode_(mode),
      vocab_(vocab),
      reference_(std::move(reference)),
      optimizer_(cfg.optimizer, params_.size()),
      rng_(derive_seed(cfg.seed, "grpo")) {
  cfg_.validate();
  reward_.validate();
  check_vocabulary(params_.descriptor, vocab_);
  if (cfg_.kl_coefficient > 0.0 && !reference_) reference_ = params_;
}

std::vector<RolloutGroup> GrpoTrainer::collect(std::span<const TrainItem> batch,
                                               std::uint64_t step_seed) const {
  std::vector<RolloutGroup> groups(batch.size());
  const SampleOptions opts{cfg_.temperature, cfg_.max_new_tokens, false};
  parallel_for(batch.size(), resolve_threads(cfg_.threads), [&](std::size_t b) {
    RolloutGroup& g = groups[b];
    g.prompt = batch[b].prompt;
    g.ground_truth = batch[b].ground_truth;
    Rng rng(derive_seed(step_seed, "rollout", b));
    g.rollouts = sample_group(params_, g.prompt, opts, cfg_.group_size, rng);
    std::vector<double> totals;
    for (const auto& ro : g.rollouts) {
      g.rewards.push_back(score(ro.tokens, g.ground_truth, reward_, mode_, vocab_));
      totals.push_back(g.rewards.back().total);
    }
    g.advantages = compute_advantages(totals, cfg_.degenerate_group_policy);
    if (reference_) {
      for (const auto& ro : g.rollouts)
        g.ref_logprobs.push_back(log_probs(*reference_, g.prompt, ro.tokens));
    }
  });
  return groups;
}

StepReport GrpoTrainer::train_step(std::span<const TrainItem> batch) {
  if (batch.empty()) throw EmptyDatasetError("empty training batch");
  const std::uint64_t step_seed = rng_();
  const auto groups = collect(batch, step_seed);

  const std::size_t B = groups.size();
  std::vector<std::vector<double>> grads(B);
  std::vector<double> objectives(B, 0.0);
  const bool use_kl = cfg_.kl_coefficient > 0.0;
  parallel_for(B, resolve_threads(cfg_.threads), [&](std::size_t b) {
    const RolloutGroup& g = groups[b];
    const bool flat = std::all_of(g.advantages.begin(), g.advantages.end(),
                                  [](double a) { return a == 0.0; });
    // A zero-advantage group without KL contributes exactly nothing.
    if (flat && !use_kl) return;
    Tape tape;
    Var obj = surrogate_objective(tape, g, params_, cfg_);
    objectives[b] = tape.scalar(obj);
    grads[b].assign(params_.size(), 0.0);
    tape.backward(obj, grads[b], 1.0 / static_cast<double>(B));
  });

  std::vector<double> grad(params_.size(), 0.0);
  for (const auto& g : grads) {
    if (g.empty()) continue;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
  }
  for (double v : grad)
    if (!std::isfinite(v)) throw NumericsError("non-finite policy gradient; parameters unchanged");

  // The optimizer descends, the objective is maximized.
  for (double& v : grad) v = -v;
  StepReport rep;
  std::vector<double> trial = params_.values;
  rep.grad_norm = optimizer_.step(trial, grad);
  for (double v : trial)
    if (!std::isfinite(v)) throw NumericsError("non-finite parameters after update");
  params_.values = std::move(trial);

  rep.step = step_;
  double kl_sum = 0.0;
  std::int64_t kl_n = 0;
  std::int64_t valid = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const auto& g = groups[b];
    rep.objective += objectives[b] / static_cast<double>(B);
    if (std::all_of(g.advantages.begin(), g.advantages.end(), [](double a) { return a == 0.0; }))
      ++rep.degenerate_groups;
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const auto& r = g.rewards[i];
      rep.mean_reward += r.total;
      rep.mean_format_reward += r.format_reward;
      rep.mean_answer_reward += r.answer_reward;
      valid += r.verdict.valid ? 1 : 0;
      rep.tokens_generated += static_cast<std::int64_t>(g.rollouts[i].tokens.size());
      ++rep.trajectories;
      if (!g.ref_logprobs.empty()) {
        for (std::size_t t = 0; t < g.rollouts[i].logprobs.size(); ++t) {
          const double d = g.ref_logprobs[i][t] - g.rollouts[i].logprobs[t];
          kl_sum += std::exp(d) - d - 1.0;
          ++kl_n;
        }
      }
    }
  }
  const double n = static_cast<double>(rep.trajectories);
  rep.mean_reward /= n;
  rep.mean_format_reward /= n;
  rep.mean_answer_reward /= n;
  rep.format_valid_fraction = static_cast<double>(valid) / n;
  rep.kl = kl_n > 0 ? kl_sum / static_cast<double>(kl_n) : 0.0;
  ++step_;
  return rep;
}

Checkpoint GrpoTrainer::checkpoint(const Vocabulary& vocab) const {
  Checkpoint c;
  c.params = params_;
  c.vocab_hash = vocab.hash();
  c.step = step_;
  c.optimizer_kind = cfg_.optimizer.kind;
  c.optimizer = optimizer_.state();
  c.rng_state = rng_state(rng_);
  return c;
}

void GrpoTrainer::restore(const Checkpoint& ckpt) {
  if (!(ckpt.params.descriptor == params_.descriptor))
    throw ConfigError("checkpoint architecture differs from the configured policy", "policy");
  if (ckpt.optimizer_kind != cfg_.optimizer.kind)
    throw ConfigError("checkpoint optimizer differs from the configured one", "optimizer");
  params_ = ckpt.params;
  optimizer_.set_state(ckpt.optimizer);
  restore_rng_state(rng_, ckpt.rng_state);
  step_ = ckpt.step;
}

std::int64_t total_steps(std::size_t dataset_size, const GrpoConfig& cfg) {
  const auto per_epoch = static_cast<std::int64_t>((dataset_size + cfg.batch_size - 1) / cfg.batch_size);
  return per_epoch * cfg.epochs;
}

std::vector<std::size_t> batch_indices(std::size_t dataset_size, int batch_size, std::int64_t step,
                                       std::uint64_t seed) {
  const auto bs = static_cast<std::size_t>(batch_size);
  const auto per_epoch = static_cast<std::int64_t>((dataset_size + bs - 1) / bs);
  const std::int64_t epoch = step / per_epoch;
  const std::size_t offset = static_cast<std::size_t>(step % per_epoch) * bs;
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "order", static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = dataset_size; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t end = std::min(dataset_size, offset + bs);
  return {order.begin() + static_cast<std::ptrdiff_t>(offset),
          order.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<StepReport> train(GrpoTrainer& trainer, std::span<const TrainItem> dataset,
                              const TrainCallbacks& cb) {
  if (dataset.empty()) throw EmptyDatasetError("empty RL training set");
  const auto& cfg = trainer.config();
  std::int64_t end = total_steps(dataset.size(), cfg);
  if (cb.stop_after >= 0) end = std::min(end, cb.stop_after);
  std::vector<StepReport> reports;
  if (trainer.step() == 0 && cb.on_eval) cb.on_eval(0, trainer.params());
  std::vector<TrainItem> batch;
  while (trainer.step() < end) {
    batch.clear();
    for (std::size_t i : batch_indices(dataset.size(), cfg.batch_size, trainer.step(), cfg.seed))
      batch.push_back(dataset[i]);
    reports.push_back(trainer.train_step(batch));
    if (cb.on_step) cb.on_step(reports.back());
    const std::int64_t done = trainer.step();
    if (cb.on_eval && cb.eval_interval > 0 && done % cb.eval_interval == 0)
      cb.on_eval(done, trainer.params());
    if (cb.on_checkpoint && cb.checkpoint_interval > 0 && done % cb.checkpoint_interval == 0)
      cb.on_checkpoint(trainer);
  }
  return reports;
}

}  // namespace reczero
