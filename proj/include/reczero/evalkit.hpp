// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Rating-prediction evaluation and the experiment tables built on it.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reczero/policy.hpp"
#include "reczero/promptkit.hpp"
#include "reczero/reward.hpp"
#include "reczero/tracelang.hpp"
#include "reczero/world.hpp"

namespace reczero {

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

// Mean absolute and root-mean-square error; sizes must match and be non-zero.
ErrorMetrics error_metrics(std::span<const double> targets, std::span<const double> predictions);

enum class Decode { greedy, sampled };

struct EvalConfig {
  Decode decode = Decode::greedy;
  TemplateMode mode = TemplateMode::full;
  PromptLimits limits{};
  int max_new_tokens = 160;
  double temperature = 1.0;  // sampled decoding only
  std::uint64_t seed = 0;    // sampled decoding only
  double fallback = 3.0;     // prediction scored for unparseable outputs
  int threads = 0;
};

struct EvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  double format_valid_fraction = 0.0;
  std::size_t unparseable_count = 0;
  double avg_generated_tokens = 0.0;
};

struct Prediction {
  double target = 3.0;
  double predicted = 3.0;
  bool parsed = false;
  bool valid = false;
  std::size_t tokens = 0;
};

// One decoded trace per example. Greedy decoding is deterministic.
EvalReport evaluate(const PolicyParams& params, const std::vector<RatingExample>& test_set,
                    const EvalConfig& cfg, const Vocabulary& vocab,
                    std::vector<Prediction>* predictions = nullptr);

const char* eval_report_header();
std::string eval_report_row(const EvalReport& r);
std::string eval_report_text(const EvalReport& r);

enum class Variant { full, no_thinking, no_multistep, correctness_only, sft_only };
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

// What a variant changes relative to the full pipeline.
struct VariantSettings {
  TemplateMode mode = TemplateMode::full;
  RewardScheme scheme = RewardScheme::paper;
  bool run_sft = true;
  bool run_rl = true;
};
VariantSettings settings_for(Variant v);

struct AblationSpec {
  std::vector<Variant> variants{Variant::full, Variant::no_thinking, Variant::no_multistep,
                                Variant::correctness_only, Variant::sft_only};
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct AblationRow {
  Variant variant = Variant::full;
  std::uint64_t seed = 0;
  EvalReport report;
};

// Per-variant mean over seeds, in the order of spec.variants.
struct AblationSummary {
  Variant variant = Variant::full;
  double mean_mae = 0.0;
  double mean_rmse = 0.0;
  double mean_format_valid = 0.0;
};
std::vector<AblationSummary> summarize_ablation(const AblationSpec& spec,
                                                const std::vector<AblationRow>& rows);
std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_text(const std::vector<AblationSummary>& summary);

struct CostRow {
  std::string name;
  std::int64_t samples_used = 0;      // SFT traces plus RL prompts seen
  std::int64_t training_steps = 0;    // SFT plus RL updates
  std::int64_t trajectories = 0;      // RL rollouts
  std::int64_t train_tokens = 0;      // RL tokens generated
  double avg_train_tokens = 0.0;      // per trajectory
  double avg_inference_tokens = 0.0;  // per evaluated example
  int inference_stages = 1;
};
std::string cost_csv(const std::vector<CostRow>& rows);
std::string cost_text(const std::vector<CostRow>& rows);

}  // namespace reczero
