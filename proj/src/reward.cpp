// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/reward.hpp"

#include <cmath>

#include "reczero/errors.hpp"
#include "reczero/world.hpp"

namespace reczero {

void RewardConfig::validate() const {
  if (!(max_error > 0.0) || !std::isfinite(max_error)) throw ConfigError("must be > 0", "max_error");
  if (scheme != RewardScheme::paper && scheme != RewardScheme::correctness_only) {
    throw ConfigError("unknown scheme", "reward_scheme");
  }
}

double answer_reward(double ground_truth, double predicted, double max_error) {
  return 1.0 - std::abs(ground_truth - predicted) / max_error;
}

RewardBreakdown score(const std::vector<TokenId>& ids, double ground_truth, const RewardConfig& cfg,
                      TemplateMode mode, const Vocabulary& vocab) {
  RewardBreakdown r;
  r.verdict = validate(ids, mode, vocab);
  r.format_reward = r.verdict.valid ? cfg.format_bonus : cfg.format_penalty;
  if (r.verdict.valid || cfg.lenient_answer) r.predicted = extract_rating(ids, vocab);

  if (cfg.scheme == RewardScheme::paper) {
    r.answer_reward = r.predicted ? answer_reward(ground_truth, *r.predicted, cfg.max_error) : 0.0;
    r.total = r.format_reward + r.answer_reward;
  } else {
    const bool exact = r.predicted && rating_tenths(*r.predicted) == rating_tenths(ground_truth);
    r.answer_reward = exact ? cfg.correctness_reward : 0.0;
    r.total = r.answer_reward;
  }
  return r;
}

}  // namespace reczero
