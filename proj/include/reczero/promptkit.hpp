// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Prompt rendering. Text form (one segment or interaction per line, tokens
// separated by one space, every line terminated by '\n'):
//
//   <sys> <instruction tags and markers for the mode>
//   <hist>
//   item <title digits> attrs <attr..> rating D . d review liked <attr..> disliked <attr..>
//   ...                                   (oldest first, newest last)
//   <target> item <title digits> attrs <attr..>
//   <out>
//
// tokenize(prompt_text(doc)) == doc.ids() holds for every prompt.

#include <string>
#include <vector>

#include "reczero/tracelang.hpp"
#include "reczero/world.hpp"

namespace reczero {

struct PromptLimits {
  int context_limit = 256;  // maximum prompt length in tokens
};

struct PromptDoc {
  std::vector<TokenId> system_segment;
  std::vector<TokenId> history_segment;
  std::vector<TokenId> target_segment;
  TemplateMode mode = TemplateMode::full;

  std::vector<TokenId> ids() const;
  std::size_t size() const {
    return system_segment.size() + history_segment.size() + target_segment.size();
  }
};

// Instruction tokens naming the sections (and, in full mode, the inner
// markers) the policy is asked to produce.
std::vector<TokenId> instruction_tokens(TemplateMode mode);

// Throws PromptOverflowError when the prompt exceeds limits.context_limit.
PromptDoc build_prompt(const RatingExample& example, TemplateMode mode, const PromptLimits& limits,
                       const Vocabulary& vocab);

// Drops the oldest interactions until the prompt fits. Throws
// PromptOverflowError if even a single interaction does not fit.
RatingExample truncate_history(const RatingExample& example, TemplateMode mode,
                               const PromptLimits& limits, const Vocabulary& vocab);

std::string prompt_text(const PromptDoc& doc, const Vocabulary& vocab);

}  // namespace reczero
