// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/promptkit.hpp"

#include "reczero/errors.hpp"

namespace reczero {

namespace {

void push_title(std::vector<TokenId>& out, const std::string& title) {
  for (char c : title) {
    if (c < '0' || c > '9') throw ConfigError("item titles must be digit strings", "title");
    out.push_back(Vocabulary::kDigit0 + (c - '0'));
  }
}

void push_item(std::vector<TokenId>& out, const ItemMeta& item, const Vocabulary& vocab) {
  out.push_back(Vocabulary::kItem);
  push_title(out, item.title);
  out.push_back(Vocabulary::kAttrs);
  for (int a : item.attributes) {
    if (a < 0 || a >= vocab.alphabet_size()) {
      throw ConfigError("attribute outside the vocabulary alphabet", "alphabet_size");
    }
    out.push_back(vocab.attr(a));
  }
}

}  // namespace

std::vector<TokenId> PromptDoc::ids() const {
  std::vector<TokenId> out;
  out.reserve(size());
  out.insert(out.end(), system_segment.begin(), system_segment.end());
  out.insert(out.end(), history_segment.begin(), history_segment.end());
  out.insert(out.end(), target_segment.begin(), target_segment.end());
  return out;
}

std::vector<TokenId> instruction_tokens(TemplateMode mode) {
  std::vector<TokenId> out;
  for (Section s : required_sections(mode)) {
    out.push_back(Vocabulary::open_tag(s));
    if (s == Section::analyze_user) {
      out.insert(out.end(), {Vocabulary::kLike, Vocabulary::kDislike, Vocabulary::kPos,
                             Vocabulary::kNeg});
    } else if (s == Section::analyze_item) {
      out.insert(out.end(), {Vocabulary::kLike, Vocabulary::kDislike});
    }
    out.push_back(Vocabulary::close_tag(s));
  }
  return out;
}

PromptDoc build_prompt(const RatingExample& example, TemplateMode mode, const PromptLimits& limits,
                       const Vocabulary& vocab) {
  if (limits.context_limit <= 0) throw ConfigError("must be positive", "context_limit");
  if (example.history.events.empty()) throw ConfigError("history must not be empty", "history");

  PromptDoc doc;
  doc.mode = mode;
  doc.system_segment.push_back(Vocabulary::kSys);
  const auto instr = instruction_tokens(mode);
  doc.system_segment.insert(doc.system_segment.end(), instr.begin(), instr.end());

  doc.history_segment.push_back(Vocabulary::kHist);
  for (const Interaction& ev : example.history.events) {
    push_item(doc.history_segment, ev.item, vocab);
    doc.history_segment.push_back(Vocabulary::kRating);
    const auto r = rating_tokens(ev.rating);
    doc.history_segment.insert(doc.history_segment.end(), r.begin(), r.end());
    doc.history_segment.push_back(Vocabulary::kReview);
    doc.history_segment.push_back(Vocabulary::kLiked);
    for (int a : ev.review.liked) doc.history_segment.push_back(vocab.attr(a));
    doc.history_segment.push_back(Vocabulary::kDisliked);
    for (int a : ev.review.disliked) doc.history_segment.push_back(vocab.attr(a));
  }

  doc.target_segment.push_back(Vocabulary::kTarget);
  push_item(doc.target_segment, example.target, vocab);
  doc.target_segment.push_back(Vocabulary::kOut);

  if (doc.size() > static_cast<std::size_t>(limits.context_limit)) {
    throw PromptOverflowError("prompt of " + std::to_string(doc.size()) +
                              " tokens exceeds context limit " +
                              std::to_string(limits.context_limit));
  }
  return doc;
}

RatingExample truncate_history(const RatingExample& example, TemplateMode mode,
                               const PromptLimits& limits, const Vocabulary& vocab) {
  RatingExample ex = example;
  while (!ex.history.events.empty()) {
    try {
      build_prompt(ex, mode, limits, vocab);
      return ex;
    } catch (const PromptOverflowError&) {
      ex.history.events.erase(ex.history.events.begin());
    }
  }
  throw PromptOverflowError("a single interaction does not fit the context limit");
}

std::string prompt_text(const PromptDoc& doc, const Vocabulary& vocab) {
  std::string out;
  auto emit = [&](TokenId t, bool first) {
    if (!first) out += ' ';
    out += vocab.surface(t);
  };
  for (std::size_t i = 0; i < doc.system_segment.size(); ++i) emit(doc.system_segment[i], i == 0);
  out += '\n';
  bool line_start = true;
  for (std::size_t i = 0; i < doc.history_segment.size(); ++i) {
    const TokenId t = doc.history_segment[i];
    if (t == Vocabulary::kItem) {
      out += '\n';
      line_start = true;
    }
    emit(t, line_start);
    line_start = false;
  }
  out += '\n';
  for (std::size_t i = 0; i < doc.target_segment.size(); ++i) {
    const TokenId t = doc.target_segment[i];
    if (t == Vocabulary::kOut) {
      out += "\n";
      emit(t, true);
    } else {
      emit(t, i == 0);
    }
  }
  out += '\n';
  return out;
}

}  // namespace reczero
