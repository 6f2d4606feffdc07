#pragma once

// Independent oracles shared by the unit tests and the acceptance harness.
// Nothing here calls into the code under test except for token ids.

#include <cmath>
#include <cstdint>
#include <vector>

#include "reczero/rng.hpp"
#include "reczero/tracelang.hpp"

namespace oracle {

using reczero::Rng;
using reczero::TemplateMode;
using reczero::TokenId;
using V = reczero::Vocabulary;

inline int pick(Rng& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

// Random non-digit section content: attribute tokens and inner markers.
inline std::vector<TokenId> content(Rng& rng, int alphabet, int max_len = 12) {
  std::vector<TokenId> out;
  const int n = pick(rng, max_len + 1);
  for (int i = 0; i < n; ++i) {
    if (pick(rng, 3) == 0) out.push_back(V::kLike + pick(rng, 4));
    else out.push_back(V::kFirstAttr + pick(rng, alphabet));
  }
  return out;
}

struct Generated {
  std::vector<TokenId> ids;
  double rating = 3.0;
  std::vector<std::size_t> tag_positions;  // indices of every structural tag
  std::size_t rate_open = 0;
  std::vector<std::pair<std::size_t, std::size_t>> analysis;  // [open, close] of non-rate sections
};

inline Generated valid_trace(Rng& rng, TemplateMode mode, int alphabet) {
  Generated g;
  auto tag = [&](TokenId t) {
    g.tag_positions.push_back(g.ids.size());
    g.ids.push_back(t);
  };
  auto section = [&](TokenId open, TokenId close) {
    const std::size_t o = g.ids.size();
    tag(open);
    for (TokenId t : content(rng, alphabet)) g.ids.push_back(t);
    tag(close);
    g.analysis.emplace_back(o, g.ids.size() - 1);
  };
  if (mode == TemplateMode::full) {
    section(V::kAnalyzeUserOpen, V::kAnalyzeUserClose);
    section(V::kAnalyzeItemOpen, V::kAnalyzeItemClose);
    section(V::kMatchOpen, V::kMatchClose);
  } else if (mode == TemplateMode::single_think) {
    section(V::kThinkOpen, V::kThinkClose);
  }
  const int units = 1 + pick(rng, 5);
  const int tenths = units == 5 ? 0 : pick(rng, 10);
  g.rating = units + tenths / 10.0;
  g.rate_open = g.ids.size();
  tag(V::kRateOpen);
  g.ids.push_back(V::kDigit0 + units);
  g.ids.push_back(V::kPoint);
  g.ids.push_back(V::kDigit0 + tenths);
  tag(V::kRateClose);
  if (pick(rng, 2) == 0) g.ids.push_back(V::kEos);
  return g;
}

// Mean absolute and root-mean-square error by the textbook definition, in
// long double.
inline std::pair<double, double> mae_rmse(const std::vector<double>& t, const std::vector<double>& p) {
  long double a = 0, s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const long double d = static_cast<long double>(t[i]) - static_cast<long double>(p[i]);
    a += d < 0 ? -d : d;
    s += d * d;
  }
  const long double n = static_cast<long double>(t.size());
  return {static_cast<double>(a / n), static_cast<double>(std::sqrt(s / n))};
}

// Reward rule written out directly: +-0.5 for format and 1 - |y - yhat| / E
// for the answer; an unreadable answer earns nothing.
inline double paper_reward(bool format_ok, bool readable, double y, double yhat, double max_error) {
  const double f = format_ok ? 0.5 : -0.5;
  const double a = readable ? 1.0 - std::abs(y - yhat) / max_error : 0.0;
  return f + a;
}

// Population mean / std normalization, the definition used for advantages.
inline std::vector<double> group_normalize(const std::vector<double>& r) {
  long double m = 0;
  for (double x : r) m += x;
  m /= static_cast<long double>(r.size());
  long double v = 0;
  for (double x : r) v += (x - m) * (x - m);
  v /= static_cast<long double>(r.size());
  const long double sd = std::sqrt(v);
  std::vector<double> out(r.size(), 0.0);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = static_cast<double>((r[i] - m) / sd);
  return out;
}

}  // namespace oracle
