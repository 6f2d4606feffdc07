#include <cmath>

#include "doctest.h"
#include "reward_table.hpp"
#include "reczero/errors.hpp"
#include "reczero/reward.hpp"

using namespace reczero;

namespace {
const Vocabulary& vocab() {
  static const Vocabulary v(16);
  return v;
}
}  // namespace

TEST_CASE("answer reward") {
  CHECK(answer_reward(4.0, 3.5, 4.0) == 0.875);
  CHECK(answer_reward(1.0, 5.0, 4.0) == 0.0);
  CHECK(answer_reward(2.5, 2.5, 4.0) == 1.0);
}

TEST_CASE("hand-checked case: valid, y=4.0, yhat=3.5") {
  const auto c = oracle::reward_cases().front();
  const auto r = score(tokenize(c.text, vocab()), 4.0, RewardConfig{}, TemplateMode::full, vocab());
  CHECK(r.verdict.valid);
  CHECK(r.total == 1.375);
}

TEST_CASE("reward table matches the oracle in both answer modes") {
  for (bool lenient : {true, false}) {
    RewardConfig cfg;
    cfg.lenient_answer = lenient;
    for (const auto& c : oracle::reward_cases()) {
      const auto r = score(tokenize(c.text, vocab()), c.y, cfg, TemplateMode::full, vocab());
      CHECK(r.verdict.valid == c.valid_format);
      CHECK(r.total == doctest::Approx(oracle::expected_reward(c, cfg)).epsilon(1e-15));
      CHECK(r.total >= -0.5);
      CHECK(r.total <= 1.5);
      CHECK(r.total == r.format_reward + r.answer_reward);
    }
  }
}

TEST_CASE("correctness-only returns exactly 0 or 2") {
  RewardConfig cfg;
  cfg.scheme = RewardScheme::correctness_only;
  for (const auto& c : oracle::reward_cases()) {
    const auto r = score(tokenize(c.text, vocab()), c.y, cfg, TemplateMode::full, vocab());
    const bool hit = c.readable && (c.valid_format || cfg.lenient_answer) &&
                     std::lround(c.y * 10) == std::lround(c.yhat * 10);
    CHECK(r.total == (hit ? 2.0 : 0.0));
  }
}

TEST_CASE("config validation") {
  RewardConfig cfg;
  cfg.max_error = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
