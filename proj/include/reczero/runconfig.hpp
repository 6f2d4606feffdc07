// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat run configuration: one YAML mapping of scalar keys (plus two lists for
// the ablation). Unknown keys are rejected. `preset: paper` switches the RL
// learning rate to the reported 2e-6; `preset: desk` (default) uses values
// that train a micro policy in minutes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reczero/coldstart.hpp"
#include "reczero/evalkit.hpp"
#include "reczero/grpo.hpp"
#include "reczero/policy.hpp"
#include "reczero/promptkit.hpp"
#include "reczero/reward.hpp"
#include "reczero/world.hpp"

namespace reczero {

struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 7;

  WorldConfig world{};
  double train_fraction = 0.85;
  double test_fraction = 0.15;
  PromptLimits limits{};
  TemplateMode mode = TemplateMode::full;
  PolicyDescriptor policy{};  // vocab_size is filled from the alphabet
  GrpoConfig grpo{};
  std::int64_t rl_steps = -1;  // cap on RL steps; -1 runs the full epoch schedule
  RewardConfig reward{};
  TeacherConfig teacher{};
  SftConfig sft{};
  int coldstart_samples = 1000;
  EvalConfig eval{};
  int eval_interval = 25;       // RL steps between curve evaluations
  int eval_subset = 100;        // test examples per curve evaluation
  int checkpoint_interval = 100;
  AblationSpec ablation{};
  std::vector<std::uint64_t> replicate_seeds{1, 2, 3, 4, 5};
  std::filesystem::path out_dir = "runs";
  int threads = 0;

  void validate() const;
};

// Defaults for a preset name ("desk" or "paper").
RunConfig preset_config(const std::string& preset);

// Reads a YAML file; keys absent from the file keep the preset defaults.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& yaml_text);

// Canonical YAML of every key that influences results (excludes out and
// threads), used for the config snapshot and the run-directory hash.
std::string canonical_yaml(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

// Named sub-seeds. Replicate-level streams mix in the replicate seed.
struct SeedPlan {
  std::uint64_t world;
  std::uint64_t split;
  std::uint64_t coldstart_pool;
  std::uint64_t eval;
  static SeedPlan from(std::uint64_t global);
};

struct ReplicateSeeds {
  std::uint64_t policy_init;
  std::uint64_t rollout;
  std::uint64_t teacher;
  std::uint64_t sft;
  static ReplicateSeeds from(std::uint64_t global, std::uint64_t replicate);
};

}  // namespace reczero
