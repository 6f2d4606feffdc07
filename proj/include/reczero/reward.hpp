// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "reczero/tracelang.hpp"

namespace reczero {

enum class RewardScheme { paper, correctness_only };

struct RewardConfig {
  double max_error = 4.0;
  RewardScheme scheme = RewardScheme::paper;
  double format_bonus = 0.5;
  double format_penalty = -0.5;
  // Answer credit for format-invalid rollouts whose rate section is still
  // readable. Off = strict: invalid traces earn no answer reward.
  bool lenient_answer = true;
  double correctness_reward = 2.0;

  void validate() const;
};

struct RewardBreakdown {
  double format_reward = 0.0;
  double answer_reward = 0.0;
  double total = 0.0;
  FormatVerdict verdict;
  std::optional<double> predicted;
};

// R_answer = 1 - |y - y_hat| / max_error.
double answer_reward(double ground_truth, double predicted, double max_error);

RewardBreakdown score(const std::vector<TokenId>& ids, double ground_truth, const RewardConfig& cfg,
                      TemplateMode mode, const Vocabulary& vocab);

}  // namespace reczero
