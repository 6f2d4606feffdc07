// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end stages shared by the CLI and the acceptance harness: data
// preparation, the SFT warm start, GRPO runs with curve evaluation, and the
// ablation matrix. Stage results are memoized inside an Experiment so the
// ablation reuses runs the replicate comparison already paid for.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "reczero/coldstart.hpp"
#include "reczero/evalkit.hpp"
#include "reczero/grpo.hpp"
#include "reczero/runconfig.hpp"
#include "reczero/world.hpp"

namespace reczero {

// The cold-start pool is carved out of the training split so SFT traces never
// overlap either the RL prompts or the test set.
struct PreparedData {
  World world;
  std::vector<RatingExample> rl_train;
  std::vector<RatingExample> coldstart_pool;
  std::vector<RatingExample> test;
};

PreparedData prepare_data(const RunConfig& cfg);

// Prompts for `mode`, with history truncated to the context limit.
std::vector<TrainItem> train_items(const std::vector<RatingExample>& examples, TemplateMode mode,
                                   const PromptLimits& limits, const Vocabulary& vocab);

struct Logger {
  std::function<void(const std::string&)> sink;
  void operator()(const std::string& line) const {
    if (sink) sink(line);
  }
};

struct SftOutcome {
  PolicyParams params;
  std::vector<double> loss_curve;
  std::size_t n_align = 0;
  std::size_t n_misalign = 0;
  std::int64_t steps = 0;
};

TraceDataset coldstart_traces(const RunConfig& cfg, const PreparedData& data, TemplateMode mode,
                              std::uint64_t replicate);
SftOutcome run_sft(const RunConfig& cfg, const std::vector<TraceSample>& traces,
                   TemplateMode mode, std::uint64_t replicate, const Logger& log = {});

struct CurvePoint {
  std::int64_t step = 0;
  EvalReport report;
};

struct RlHooks {
  Logger log;
  std::function<void(const GrpoTrainer&)> on_checkpoint;
};

struct RlOutcome {
  PolicyParams params;
  std::vector<StepReport> steps;
  std::vector<CurvePoint> curve;
  EvalReport final_report;
};

// GRPO from `init` over the RL split, evaluating the first eval_subset test
// examples every eval_interval steps (and at step 0).
RlOutcome run_rl(const RunConfig& cfg, const PreparedData& data, PolicyParams init,
                 TemplateMode mode, RewardScheme scheme, std::uint64_t replicate,
                 const RlHooks& hooks = {});

PolicyParams initial_policy(const RunConfig& cfg, std::uint64_t replicate);
EvalConfig eval_config(const RunConfig& cfg, TemplateMode mode);

// Memoizing driver. Runs are keyed by (mode, scheme, warm start, replicate).
class Experiment {
 public:
  explicit Experiment(RunConfig cfg, Logger log = {});

  const RunConfig& config() const { return cfg_; }
  const PreparedData& data() const { return data_; }
  const Vocabulary& vocab() const { return vocab_; }

  const SftOutcome& sft(TemplateMode mode, std::uint64_t replicate);
  const RlOutcome& rl(TemplateMode mode, RewardScheme scheme, bool warm, std::uint64_t replicate);
  const RlOutcome& reczero(std::uint64_t replicate);
  const RlOutcome& recone(std::uint64_t replicate);
  const EvalReport& sft_only(std::uint64_t replicate);

  AblationRow variant(Variant v, std::uint64_t seed);
  std::vector<AblationRow> ablation();
  CostRow cost(Variant v, std::uint64_t seed);
  CostRow reczero_cost(std::uint64_t replicate);

 private:
  RunConfig cfg_;
  Logger log_;
  Vocabulary vocab_;
  PreparedData data_;
  std::map<std::pair<TemplateMode, std::uint64_t>, std::unique_ptr<SftOutcome>> sft_;
  std::map<std::tuple<TemplateMode, RewardScheme, bool, std::uint64_t>, std::unique_ptr<RlOutcome>>
      rl_;
  std::map<std::uint64_t, EvalReport> sft_only_;
};

// Metrics files.
std::string steps_csv(const std::vector<StepReport>& steps);
std::string curve_csv(const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& runs);
std::string loss_csv(const std::vector<double>& losses);

// Run directory keyed by the config hash. Holds an exclusive lock file for
// its lifetime; a second holder gets PrerequisiteError.
class RunDir {
 public:
  RunDir(const RunConfig& cfg, bool quiet);
  ~RunDir();
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  // Writes a file, warning on stderr when it replaces an existing one.
  void write(const std::string& name, const std::string& contents) const;
  void require(const std::string& name, const std::string& produced_by) const;

 private:
  std::filesystem::path path_;
  std::filesystem::path lock_;
  bool quiet_;
};

}  // namespace reczero
