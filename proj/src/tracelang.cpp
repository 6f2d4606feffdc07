// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/tracelang.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "reczero/errors.hpp"
#include "reczero/rng.hpp"
#include "reczero/world.hpp"

namespace reczero {

std::string_view mode_name(TemplateMode mode) {
  switch (mode) {
    case TemplateMode::full:
      return "full";
    case TemplateMode::no_think:
      return "no_think";
    case TemplateMode::single_think:
      return "single_think";
  }
  return "full";
}

TemplateMode parse_mode(std::string_view name) {
  if (name == "full") return TemplateMode::full;
  if (name == "no_think") return TemplateMode::no_think;
  if (name == "single_think") return TemplateMode::single_think;
  throw ConfigError("unknown template mode '" + std::string(name) + "'", "mode");
}

const std::vector<Section>& required_sections(TemplateMode mode) {
  static const std::vector<Section> full{Section::analyze_user, Section::analyze_item,
                                         Section::match, Section::rate};
  static const std::vector<Section> single{Section::think, Section::rate};
  static const std::vector<Section> none{Section::rate};
  switch (mode) {
    case TemplateMode::full:
      return full;
    case TemplateMode::single_think:
      return single;
    case TemplateMode::no_think:
      return none;
  }
  return full;
}

Vocabulary::Vocabulary(int alphabet_size) : alphabet_size_(alphabet_size) {
  if (alphabet_size <= 0) throw ConfigError("must be positive", "alphabet_size");
  surfaces_ = {"<eos>",
               "<analyze user>",
               "</analyze user>",
               "<analyze item>",
               "</analyze item>",
               "<match>",
               "</match>",
               "<rate>",
               "</rate>",
               "<think>",
               "</think>",
               "[like]",
               "[dislike]",
               "[pos]",
               "[neg]"};
  for (int d = 0; d < 10; ++d) surfaces_.push_back(std::to_string(d));
  for (const char* w : {".", "<sys>", "<hist>", "<target>", "<out>", "item", "attrs", "rating",
                        "review", "liked", "disliked"}) {
    surfaces_.emplace_back(w);
  }
  for (int a = 0; a < alphabet_size; ++a) surfaces_.push_back(attr_name(a));
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    ids_.emplace(surfaces_[i], static_cast<TokenId>(i));
  }
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (id < 0 || id >= size()) throw UnknownTokenError("#" + std::to_string(id), 0);
  return surfaces_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view surface) const {
  if (auto t = find(surface)) return *t;
  throw UnknownTokenError(std::string(surface), 0);
}

bool Vocabulary::in_trace_alphabet(TokenId t) const {
  return t == kEos || is_tag(t) || is_marker(t) || is_digit(t) || t == kPoint || is_attr(t);
}

TokenId Vocabulary::open_tag(Section s) {
  switch (s) {
    case Section::analyze_user:
      return kAnalyzeUserOpen;
    case Section::analyze_item:
      return kAnalyzeItemOpen;
    case Section::match:
      return kMatchOpen;
    case Section::think:
      return kThinkOpen;
    case Section::rate:
      return kRateOpen;
  }
  return kRateOpen;
}

TokenId Vocabulary::close_tag(Section s) { return open_tag(s) + 1; }

std::string Vocabulary::manifest() const {
  std::string out;
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += surfaces_[i];
    out += '\n';
  }
  return out;
}

std::uint64_t Vocabulary::hash() const { return fnv1a(manifest()); }

Vocabulary Vocabulary::from_manifest(std::string_view manifest) {
  std::vector<std::string> surfaces;
  std::istringstream is{std::string(manifest)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError("malformed vocabulary manifest line", "vocab");
    if (std::stoul(line.substr(0, tab)) != surfaces.size()) {
      throw ConfigError("vocabulary manifest indices are not dense", "vocab");
    }
    surfaces.push_back(line.substr(tab + 1));
  }
  const int alphabet = static_cast<int>(surfaces.size()) - kFirstAttr;
  if (alphabet <= 0) throw ConfigError("vocabulary manifest too short", "vocab");
  Vocabulary v(alphabet);
  if (v.surfaces_ != surfaces) throw ConfigError("vocabulary manifest does not match", "vocab");
  return v;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  struct Piece {
    std::string_view text;
    std::size_t offset;
  };
  std::vector<Piece> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) pieces.push_back({text.substr(start, i - start), start});
  }
  std::vector<TokenId> ids;
  ids.reserve(pieces.size());
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (auto t = vocab.find(pieces[k].text)) {
      ids.push_back(*t);
      continue;
    }
    if (k + 1 < pieces.size()) {
      std::string joined(pieces[k].text);
      joined += ' ';
      joined += pieces[k + 1].text;
      if (auto t = vocab.find(joined)) {
        ids.push_back(*t);
        ++k;
        continue;
      }
    }
    throw UnknownTokenError(std::string(pieces[k].text), pieces[k].offset);
  }
  return ids;
}

std::string detokenize(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.surface(ids[i]);
  }
  return out;
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::none:
      return "none";
    case Violation::missing_section:
      return "missing-section";
    case Violation::out_of_order:
      return "out-of-order";
    case Violation::unknown_token:
      return "unknown-token";
    case Violation::unparseable_rating:
      return "unparseable-rating";
    case Violation::trailing_content:
      return "trailing-content";
  }
  return "none";
}

std::array<TokenId, 3> rating_tokens(double rating) {
  const int tenths = rating_tenths(quantize_rating(rating));
  return {Vocabulary::kDigit0 + tenths / 10, Vocabulary::kPoint, Vocabulary::kDigit0 + tenths % 10};
}

std::optional<double> read_rating(const TokenId* t, std::size_t n) {
  if (n != 3) return std::nullopt;
  if (!Vocabulary::is_digit(t[0]) || t[1] != Vocabulary::kPoint || !Vocabulary::is_digit(t[2])) {
    return std::nullopt;
  }
  const int units = Vocabulary::digit_value(t[0]);
  const int tenths = units * 10 + Vocabulary::digit_value(t[2]);
  if (units < 1 || tenths > 50) return std::nullopt;
  return static_cast<double>(tenths) / 10.0;
}

namespace {

FormatVerdict fail(Violation v) { return {false, v}; }

struct Layout {
  std::size_t end = 0;                    // length without the final <eos>
  std::vector<std::size_t> open, close;   // tag positions per required section
};

}  // namespace

FormatVerdict validate(const std::vector<TokenId>& ids, TemplateMode mode,
                       const Vocabulary& vocab) {
  std::size_t n = ids.size();
  if (n > 0 && ids[n - 1] == Vocabulary::kEos) --n;

  for (std::size_t i = 0; i < n; ++i) {
    if (ids[i] == Vocabulary::kEos || !vocab.in_trace_alphabet(ids[i])) {
      return fail(Violation::unknown_token);
    }
  }

  const std::vector<Section>& sections = required_sections(mode);
  std::array<int, Vocabulary::kThinkClose + 1> counts{};
  for (std::size_t i = 0; i < n; ++i) {
    if (Vocabulary::is_tag(ids[i])) ++counts[static_cast<std::size_t>(ids[i])];
  }
  std::array<bool, Vocabulary::kThinkClose + 1> required{};
  for (Section s : sections) {
    const auto o = static_cast<std::size_t>(Vocabulary::open_tag(s));
    const auto c = static_cast<std::size_t>(Vocabulary::close_tag(s));
    if (counts[o] == 0 || counts[c] == 0) return fail(Violation::missing_section);
    required[o] = required[c] = true;
  }
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] > 1 || (counts[t] > 0 && !required[t])) return fail(Violation::out_of_order);
  }

  // Every required tag occurs exactly once from here on.
  std::vector<std::size_t> open, close;
  for (Section s : sections) {
    const auto o = std::find(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                             Vocabulary::open_tag(s));
    const auto c = std::find(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n),
                             Vocabulary::close_tag(s));
    open.push_back(static_cast<std::size_t>(o - ids.begin()));
    close.push_back(static_cast<std::size_t>(c - ids.begin()));
  }
  std::size_t expect = 0;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    if (open[k] < expect || close[k] < open[k]) return fail(Violation::out_of_order);
    if (open[k] != expect) return fail(Violation::out_of_order);
    expect = close[k] + 1;
  }
  for (std::size_t k = 0; k + 1 < sections.size(); ++k) {
    for (std::size_t i = open[k] + 1; i < close[k]; ++i) {
      if (Vocabulary::is_digit(ids[i]) || ids[i] == Vocabulary::kPoint) {
        return fail(Violation::out_of_order);
      }
    }
  }
  if (expect != n) return fail(Violation::trailing_content);

  const std::size_t ro = open.back();
  const std::size_t rc = close.back();
  if (!read_rating(ids.data() + ro + 1, rc - ro - 1)) return fail(Violation::unparseable_rating);
  return {};
}

namespace {

std::optional<AttrJudgment> read_judgment(const std::vector<TokenId>& content, std::size_t& pos,
                                          TokenId first, TokenId second, const Vocabulary& v) {
  if (pos >= content.size() || content[pos] != first) return std::nullopt;
  AttrJudgment j;
  ++pos;
  while (pos < content.size() && v.is_attr(content[pos])) j.liked.push_back(v.attr_index(content[pos++]));
  if (pos >= content.size() || content[pos] != second) return std::nullopt;
  ++pos;
  while (pos < content.size() && v.is_attr(content[pos])) {
    j.disliked.push_back(v.attr_index(content[pos++]));
  }
  return j;
}

void read_structure(ParsedTrace& trace, const Vocabulary& v) {
  {
    std::size_t pos = 0;
    std::vector<AttrJudgment> items;
    while (pos < trace.user_analysis.size() && trace.user_analysis[pos] == Vocabulary::kLike) {
      auto j = read_judgment(trace.user_analysis, pos, Vocabulary::kLike, Vocabulary::kDislike, v);
      if (!j) break;
      items.push_back(std::move(*j));
    }
    auto summary = read_judgment(trace.user_analysis, pos, Vocabulary::kPos, Vocabulary::kNeg, v);
    if (summary && pos == trace.user_analysis.size()) {
      trace.per_item = std::move(items);
      trace.summary = std::move(summary);
    }
  }
  {
    std::size_t pos = 0;
    auto target = read_judgment(trace.item_analysis, pos, Vocabulary::kLike, Vocabulary::kDislike, v);
    if (target && pos == trace.item_analysis.size()) trace.target = std::move(target);
  }
}

}  // namespace

ParsedTrace parse(const std::vector<TokenId>& ids, TemplateMode mode, const Vocabulary& vocab) {
  const FormatVerdict verdict = validate(ids, mode, vocab);
  if (!verdict.valid) {
    throw FormatError("cannot parse invalid trace: " + std::string(violation_name(verdict.violation)));
  }
  ParsedTrace trace;
  trace.mode = mode;
  trace.eos = !ids.empty() && ids.back() == Vocabulary::kEos;
  std::size_t pos = 0;
  for (Section s : required_sections(mode)) {
    const std::size_t open = pos;
    std::size_t close = open + 1;
    while (ids[close] != Vocabulary::close_tag(s)) ++close;
    std::vector<TokenId> content(ids.begin() + static_cast<std::ptrdiff_t>(open + 1),
                                 ids.begin() + static_cast<std::ptrdiff_t>(close));
    switch (s) {
      case Section::analyze_user:
        trace.user_analysis = std::move(content);
        break;
      case Section::analyze_item:
        trace.item_analysis = std::move(content);
        break;
      case Section::match:
        trace.match = std::move(content);
        break;
      case Section::think:
        trace.think = std::move(content);
        break;
      case Section::rate:
        trace.rating = read_rating(content.data(), content.size());
        break;
    }
    pos = close + 1;
  }
  read_structure(trace, vocab);
  return trace;
}

std::vector<TokenId> render(const ParsedTrace& trace) {
  std::vector<TokenId> out;
  for (Section s : required_sections(trace.mode)) {
    out.push_back(Vocabulary::open_tag(s));
    const std::vector<TokenId>* content = nullptr;
    switch (s) {
      case Section::analyze_user:
        content = &trace.user_analysis;
        break;
      case Section::analyze_item:
        content = &trace.item_analysis;
        break;
      case Section::match:
        content = &trace.match;
        break;
      case Section::think:
        content = &trace.think;
        break;
      case Section::rate:
        break;
    }
    if (content) {
      out.insert(out.end(), content->begin(), content->end());
    } else if (trace.rating) {
      const auto r = rating_tokens(*trace.rating);
      out.insert(out.end(), r.begin(), r.end());
    }
    out.push_back(Vocabulary::close_tag(s));
  }
  if (trace.eos) out.push_back(Vocabulary::kEos);
  return out;
}

std::optional<double> extract_rating(const std::vector<TokenId>& ids, const Vocabulary&) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != Vocabulary::kRateOpen) continue;
    std::size_t j = i + 1;
    while (j < ids.size() && ids[j] != Vocabulary::kRateClose) ++j;
    if (j == ids.size()) return std::nullopt;
    if (auto r = read_rating(ids.data() + i + 1, j - i - 1)) return r;
  }
  return std::nullopt;
}

}  // namespace reczero
