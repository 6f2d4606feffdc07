// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Closed vocabulary and trace grammar shared by the prompt renderer, the
// policy and the reward engine.
//
// Trace text form: surface forms joined by a single ASCII space, no leading
// or trailing whitespace. A full-mode trace reads
//
//   <analyze user> ... </analyze user> <analyze item> ... </analyze item>
//   <match> ... </match> <rate> D . d </rate> <eos>
//
// where analysis sections hold attribute tokens and the inner markers
// [like] [dislike] [pos] [neg], and the rating is a units digit 1-5, a point
// and a tenths digit, at most 5.0.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace reczero {

using TokenId = std::int32_t;

enum class TemplateMode { full, no_think, single_think };

std::string_view mode_name(TemplateMode mode);
TemplateMode parse_mode(std::string_view name);  // throws ConfigError

enum class Section { analyze_user, analyze_item, match, think, rate };

// Sections a trace must contain, in order, for `mode`.
const std::vector<Section>& required_sections(TemplateMode mode);

class Vocabulary {
 public:
  // Fixed token ids; attribute tokens follow at kFirstAttr.
  static constexpr TokenId kEos = 0;
  static constexpr TokenId kAnalyzeUserOpen = 1;
  static constexpr TokenId kAnalyzeUserClose = 2;
  static constexpr TokenId kAnalyzeItemOpen = 3;
  static constexpr TokenId kAnalyzeItemClose = 4;
  static constexpr TokenId kMatchOpen = 5;
  static constexpr TokenId kMatchClose = 6;
  static constexpr TokenId kRateOpen = 7;
  static constexpr TokenId kRateClose = 8;
  static constexpr TokenId kThinkOpen = 9;
  static constexpr TokenId kThinkClose = 10;
  static constexpr TokenId kLike = 11;
  static constexpr TokenId kDislike = 12;
  static constexpr TokenId kPos = 13;
  static constexpr TokenId kNeg = 14;
  static constexpr TokenId kDigit0 = 15;  // digits 0..9 are 15..24
  static constexpr TokenId kPoint = 25;
  static constexpr TokenId kSys = 26;
  static constexpr TokenId kHist = 27;
  static constexpr TokenId kTarget = 28;
  static constexpr TokenId kOut = 29;
  static constexpr TokenId kItem = 30;
  static constexpr TokenId kAttrs = 31;
  static constexpr TokenId kRating = 32;
  static constexpr TokenId kReview = 33;
  static constexpr TokenId kLiked = 34;
  static constexpr TokenId kDisliked = 35;
  static constexpr TokenId kFirstAttr = 36;

  explicit Vocabulary(int alphabet_size = 16);

  int size() const { return static_cast<int>(surfaces_.size()); }
  int alphabet_size() const { return alphabet_size_; }

  const std::string& surface(TokenId id) const;
  std::optional<TokenId> find(std::string_view surface) const;
  TokenId id(std::string_view surface) const;  // throws UnknownTokenError

  TokenId attr(int a) const { return kFirstAttr + a; }
  TokenId digit(int d) const { return kDigit0 + d; }
  bool is_attr(TokenId t) const { return t >= kFirstAttr && t < size(); }
  int attr_index(TokenId t) const { return t - kFirstAttr; }
  static bool is_digit(TokenId t) { return t >= kDigit0 && t < kDigit0 + 10; }
  static int digit_value(TokenId t) { return t - kDigit0; }
  static bool is_tag(TokenId t) { return t >= kAnalyzeUserOpen && t <= kThinkClose; }
  static bool is_marker(TokenId t) { return t >= kLike && t <= kNeg; }
  // Tokens that may appear in a generated trace (everything except the
  // prompt-only separators and words).
  bool in_trace_alphabet(TokenId t) const;

  static TokenId open_tag(Section s);
  static TokenId close_tag(Section s);

  // "index<TAB>surface" per line, ascending index.
  std::string manifest() const;
  std::uint64_t hash() const;
  static Vocabulary from_manifest(std::string_view manifest);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.surfaces_ == b.surfaces_;
  }

 private:
  int alphabet_size_;
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Whitespace-separated surface forms to ids. Two-word tags such as
// "<analyze user>" are recognized across the separating whitespace.
// Throws UnknownTokenError carrying the byte offset of the bad form.
std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(const std::vector<TokenId>& ids, const Vocabulary& vocab);

enum class Violation {
  none,
  missing_section,
  out_of_order,
  unknown_token,
  unparseable_rating,
  trailing_content,
};

std::string_view violation_name(Violation v);

struct FormatVerdict {
  bool valid = true;
  Violation violation = Violation::none;
};

// Total function. Checks, in priority order: tokens outside the trace
// alphabet (unknown-token); a required tag absent (missing-section);
// duplicated or foreign tags, wrong tag order, content outside sections or a
// digit inside an analysis section (out-of-order); content after </rate>
// other than one final <eos> (trailing-content); a rate section that is not
// exactly one in-range rating (unparseable-rating).
FormatVerdict validate(const std::vector<TokenId>& ids, TemplateMode mode,
                       const Vocabulary& vocab);

// Structured reading of marker-delimited content: "[like] a* [dislike] a*".
struct AttrJudgment {
  std::vector<int> liked;
  std::vector<int> disliked;

  friend bool operator==(const AttrJudgment&, const AttrJudgment&) = default;
};

struct ParsedTrace {
  TemplateMode mode = TemplateMode::full;
  // Raw section contents between the tags; these make render() lossless.
  std::vector<TokenId> user_analysis;
  std::vector<TokenId> item_analysis;
  std::vector<TokenId> match;
  std::vector<TokenId> think;
  std::optional<double> rating;
  bool eos = false;

  // Present when the user section follows the prompt's inner-marker layout:
  // one "[like] .. [dislike] .." group per history item, then "[pos] .. [neg] ..".
  std::optional<std::vector<AttrJudgment>> per_item;
  std::optional<AttrJudgment> summary;  // liked = [pos], disliked = [neg]
  std::optional<AttrJudgment> target;   // "[like] .. [dislike] .." of the item section
};

ParsedTrace parse(const std::vector<TokenId>& ids, TemplateMode mode, const Vocabulary& vocab);
std::vector<TokenId> render(const ParsedTrace& trace);

// Rating of the first rate section whose content is a well-formed in-range
// rating, regardless of the rest of the sequence.
std::optional<double> extract_rating(const std::vector<TokenId>& ids, const Vocabulary& vocab);

// Three tokens: units digit, point, tenths digit. `rating` is put on the grid first.
std::array<TokenId, 3> rating_tokens(double rating);
// Reads exactly three rating tokens; nullopt if malformed or out of [1.0, 5.0].
std::optional<double> read_rating(const TokenId* tokens, std::size_t n);

}  // namespace reczero
