#pragma once

// Single-mutation corruptions of a valid trace, each paired with the
// violation class the grammar assigns to it.

#include <algorithm>

#include "oracles.hpp"
#include "reczero/tracelang.hpp"

namespace oracle {

struct Mutant {
  std::vector<TokenId> ids;
  reczero::Violation expected;
};

inline Mutant mutate(const Generated& g, TemplateMode mode, int alphabet, Rng& rng) {
  using reczero::Violation;
  Mutant m{g.ids, Violation::none};
  auto& ids = m.ids;
  const bool has_eos = ids.back() == V::kEos;
  const std::size_t body = has_eos ? ids.size() - 1 : ids.size();
  const int kinds = g.analysis.empty() ? 6 : 9;
  switch (pick(rng, kinds)) {
    case 0: {  // drop a required tag
      const std::size_t at = g.tag_positions[static_cast<std::size_t>(
          pick(rng, static_cast<int>(g.tag_positions.size())))];
      ids.erase(ids.begin() + static_cast<long>(at));
      m.expected = Violation::missing_section;
      break;
    }
    case 1: {  // prompt-only word, stray <eos> or out-of-range id anywhere in the body
      const int which = pick(rng, 3);
      const TokenId t = which == 0   ? V::kSys + pick(rng, V::kFirstAttr - V::kSys)
                        : which == 1 ? V::kEos
                                     : V::kFirstAttr + alphabet + pick(rng, 5);
      ids.insert(ids.begin() + pick(rng, static_cast<int>(body)), t);
      m.expected = Violation::unknown_token;
      break;
    }
    case 2: {  // duplicate a tag of this mode somewhere before the end
      const TokenId t = ids[g.tag_positions[static_cast<std::size_t>(
          pick(rng, static_cast<int>(g.tag_positions.size())))]];
      ids.insert(ids.begin() + pick(rng, static_cast<int>(body) + 1), t);
      m.expected = Violation::out_of_order;
      break;
    }
    case 3: {  // foreign tag
      const TokenId t = mode == TemplateMode::full ? (pick(rng, 2) ? V::kThinkOpen : V::kThinkClose)
                                                   : V::kMatchOpen;
      ids.insert(ids.begin() + pick(rng, static_cast<int>(body) + 1), t);
      m.expected = Violation::out_of_order;
      break;
    }
    case 4: {  // content after </rate>, before any final <eos>
      ids.insert(ids.begin() + static_cast<long>(body), V::kFirstAttr + pick(rng, alphabet));
      m.expected = Violation::trailing_content;
      break;
    }
    case 5: {  // corrupt the rating
      const std::size_t u = g.rate_open + 1;
      switch (pick(rng, 5)) {
        case 0: ids[u] = V::kDigit0 + (pick(rng, 2) ? 0 : 6 + pick(rng, 4)); break;
        case 1: ids[u] = V::kDigit0 + 5; ids[u + 2] = V::kDigit0 + 1 + pick(rng, 9); break;
        case 2: ids.erase(ids.begin() + static_cast<long>(u + 1)); break;
        case 3: ids.insert(ids.begin() + static_cast<long>(u + 3), V::kDigit0 + pick(rng, 10)); break;
        default: ids[u + pick(rng, 3)] = V::kFirstAttr + pick(rng, alphabet); break;
      }
      m.expected = Violation::unparseable_rating;
      break;
    }
    case 6: {  // digit or point inside an analysis section
      const auto [o, c] = g.analysis[static_cast<std::size_t>(pick(rng, static_cast<int>(g.analysis.size())))];
      const TokenId t = pick(rng, 4) == 0 ? V::kPoint : V::kDigit0 + pick(rng, 10);
      ids.insert(ids.begin() + static_cast<long>(o + 1 + static_cast<std::size_t>(pick(rng, static_cast<int>(c - o)))), t);
      m.expected = Violation::out_of_order;
      break;
    }
    case 7: {  // content between sections or before the first
      const std::size_t at = pick(rng, 2) == 0 ? 0 : g.analysis[static_cast<std::size_t>(pick(rng, static_cast<int>(g.analysis.size())))].second + 1;
      ids.insert(ids.begin() + static_cast<long>(at), V::kFirstAttr + pick(rng, alphabet));
      m.expected = Violation::out_of_order;
      break;
    }
    default: {  // swap the first section with the rate section
      const auto [o, c] = g.analysis.front();
      std::vector<TokenId> first(ids.begin() + static_cast<long>(o), ids.begin() + static_cast<long>(c + 1));
      std::vector<TokenId> rate(ids.begin() + static_cast<long>(g.rate_open), ids.begin() + static_cast<long>(body));
      std::vector<TokenId> out(rate);
      out.insert(out.end(), ids.begin() + static_cast<long>(c + 1), ids.begin() + static_cast<long>(g.rate_open));
      out.insert(out.end(), first.begin(), first.end());
      if (has_eos) out.push_back(V::kEos);
      ids = out;
      m.expected = Violation::out_of_order;
      break;
    }
  }
  return m;
}

}  // namespace oracle
