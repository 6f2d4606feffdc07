#pragma once

// Table of (y, yhat, format) cases scored by the independent reward oracle.

#include <string>
#include <vector>

#include "oracles.hpp"
#include "reczero/reward.hpp"

namespace oracle {

struct RewardCase {
  double y;
  double yhat;
  bool valid_format;
  bool readable;  // rate section well formed
  std::string text;
};

inline std::string rate_text(double r) {
  const int tenths = static_cast<int>(std::lround(r * 10.0));
  return "<rate> " + std::to_string(tenths / 10) + " . " + std::to_string(tenths % 10) + " </rate>";
}

inline std::vector<RewardCase> reward_cases() {
  std::vector<RewardCase> out;
  const std::string head =
      "<analyze user> [like] attr_1 [dislike] [pos] attr_1 [neg] </analyze user> "
      "<analyze item> [like] attr_1 [dislike] </analyze item> <match> [pos] attr_1 [neg] </match> ";
  const std::string broken = "<analyze user> </analyze user> <match> </match> ";
  Rng rng(50);
  out.push_back({4.0, 3.5, true, true, head + rate_text(3.5)});
  out.push_back({1.0, 5.0, true, true, head + rate_text(5.0)});
  out.push_back({5.0, 5.0, true, true, head + rate_text(5.0)});
  out.push_back({3.0, 3.0, false, true, broken + rate_text(3.0)});
  out.push_back({2.2, 0.0, false, false, head + "<rate> 7 . 1 </rate>"});
  out.push_back({4.4, 0.0, false, false, head + "<rate> 4 4 </rate>"});
  while (out.size() < 50) {
    const double y = (10 + pick(rng, 41)) / 10.0;
    const double yhat = (10 + pick(rng, 41)) / 10.0;
    const bool ok = pick(rng, 3) != 0;
    out.push_back({y, yhat, ok, true, (ok ? head : broken) + rate_text(yhat)});
  }
  return out;
}

inline double expected_reward(const RewardCase& c, const reczero::RewardConfig& cfg) {
  const bool counted = c.readable && (c.valid_format || cfg.lenient_answer);
  return paper_reward(c.valid_format, counted, c.y, c.yhat, cfg.max_error);
}

}  // namespace oracle
