#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fd.hpp"
#include "grpo_instances.hpp"
#include "oracles.hpp"
#include "reczero/coldstart.hpp"
#include "reczero/errors.hpp"
#include "reczero/grpo.hpp"

using namespace reczero;

namespace {

double surrogate_value(const oracle::SurrogateInstance& s, const std::vector<double>& values,
                       double eps, std::vector<double>* grad = nullptr) {
  PolicyParams p = s.new_params;
  p.values = values;
  GrpoConfig cfg;
  cfg.clip_epsilon = eps;
  Tape tape;
  const Var obj = surrogate_objective(tape, s.group, p, cfg);
  const double v = tape.scalar(obj);
  if (grad) *grad = tape.backward(obj);
  return v;
}

}  // namespace

TEST_CASE("advantages: fixed examples") {
  const std::vector<double> two{0.0, 2.0};
  CHECK(compute_advantages(two) == std::vector<double>{-1.0, 1.0});
  const std::vector<double> flat{0.7, 0.7, 0.7};
  CHECK(compute_advantages(flat) == std::vector<double>{0.0, 0.0, 0.0});
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(compute_advantages(one), ConfigError);
}

TEST_CASE("advantages: zero mean, unit population std") {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const int G = 2 + oracle::pick(rng, 15);
    std::vector<double> r(static_cast<std::size_t>(G));
    for (double& x : r) x = oracle::pick(rng, 4) == 0 ? 0.5 : reczero::uniform01(rng) * 2.0 - 0.5;
    const auto a = compute_advantages(r);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / G;
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / G);
    CHECK(std::abs(mean) < 1e-9);
    CHECK((sd < 1e-9 || std::abs(sd - 1.0) < 1e-9));
    const auto o = oracle::group_normalize(r);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(o[k]).epsilon(1e-12));
  }
}

TEST_CASE("surrogate is zero on-policy") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = oracle::surrogate_instance(seed);
    CHECK(std::abs(surrogate_value(s, s.old_params.values, 0.2)) < 1e-9);
  }
}

TEST_CASE("surrogate with unbounded clip equals the plain ratio objective") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = oracle::surrogate_instance(seed);
    const double G = static_cast<double>(s.group.rollouts.size());
    double expect = 0.0;
    for (std::size_t i = 0; i < s.group.rollouts.size(); ++i) {
      const auto& ro = s.group.rollouts[i];
      const auto lp = log_probs(s.new_params, s.group.prompt, ro.tokens);
      const double w = 1.0 / (G * static_cast<double>(ro.tokens.size()));
      for (std::size_t t = 0; t < lp.size(); ++t)
        expect += w * (std::exp(lp[t] - ro.logprobs[t]) * s.group.advantages[i]);
    }
    CHECK(surrogate_value(s, s.new_params.values, 1e300) == expect);
  }
}

TEST_CASE("surrogate gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto s = oracle::surrogate_instance(seed);
    REQUIRE(s.new_params.size() <= 500);
    std::vector<double> g;
    surrogate_value(s, s.new_params.values, 0.2, &g);
    const auto num = oracle::central_diff(
        [&](const std::vector<double>& x) { return surrogate_value(s, x, 0.2); },
        s.new_params.values);
    CHECK(oracle::relative_error(g, num) < 1e-4);
  }
}

TEST_CASE("fully clipped groups produce no gradient") {
  auto s = oracle::surrogate_instance(4);
  // Make every old log-prob tiny so each ratio is far above 1 + eps; with
  // positive advantages the clipped branch is the minimum everywhere.
  for (auto& ro : s.group.rollouts)
    for (double& lp : ro.logprobs) lp -= 50.0;
  for (double& a : s.group.advantages) a = 1.0;
  std::vector<double> g;
  surrogate_value(s, s.new_params.values, 0.2, &g);
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("kl term is zero against itself and positive otherwise") {
  auto s = oracle::surrogate_instance(6);
  GrpoConfig cfg;
  cfg.kl_coefficient = 0.5;
  s.group.ref_logprobs.clear();
  for (const auto& ro : s.group.rollouts)
    s.group.ref_logprobs.push_back(log_probs(s.new_params, s.group.prompt, ro.tokens));
  Tape tape;
  const double with_self = tape.scalar(surrogate_objective(tape, s.group, s.new_params, cfg));
  cfg.kl_coefficient = 0.0;
  Tape t2;
  const double without = t2.scalar(surrogate_objective(t2, s.group, s.new_params, cfg));
  CHECK(with_self == doctest::Approx(without).epsilon(1e-12));
  cfg.kl_coefficient = 0.5;
  for (auto& ref : s.group.ref_logprobs)
    for (double& x : ref) x -= 0.3;
  Tape t3;
  CHECK(t3.scalar(surrogate_objective(t3, s.group, s.new_params, cfg)) < without);
}

TEST_CASE("schedule helpers") {
  GrpoConfig cfg;
  CHECK(total_steps(2400, cfg) == 300);
  CHECK(total_steps(2401, cfg) == 301);
  cfg.epochs = 2;
  CHECK(total_steps(16, cfg) == 4);
  std::vector<int> seen(20, 0);
  for (std::int64_t step = 0; step < 3; ++step)
    for (std::size_t i : batch_indices(20, 8, step, 5)) ++seen[i];
  for (int c : seen) CHECK(c == 1);  // 8 + 8 + 4 covers the epoch once
  CHECK(batch_indices(20, 8, 0, 5) == batch_indices(20, 8, 0, 5));
  CHECK(batch_indices(20, 8, 3, 5).size() == 8);  // next epoch, reshuffled
}

TEST_CASE("paper preset and validation") {
  const auto p = GrpoConfig::paper_preset();
  CHECK(p.optimizer.learning_rate == 2e-6);
  CHECK(p.batch_size == 8);
  CHECK(p.group_size == 8);
  CHECK(p.kl_coefficient == 0.0);
  GrpoConfig bad;
  bad.group_size = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("trainer is deterministic, resumable and thread-count independent") {
  const Vocabulary vocab(4);
  PolicyDescriptor d;
  d.vocab_size = vocab.size();
  d.embed_dim = 4;
  d.hidden_dim = 6;
  d.cell = CellKind::gru;
  std::vector<TrainItem> items;
  Rng rng(1);
  for (int i = 0; i < 12; ++i) {
    TrainItem it;
    it.prompt = {Vocabulary::kSys, Vocabulary::kRateOpen, vocab.attr(oracle::pick(rng, 4))};
    it.ground_truth = 1.0 + oracle::pick(rng, 40) / 10.0;
    items.push_back(it);
  }
  // A short warm start on bare rate sections so groups carry different
  // ratings and the advantages are not all zero.
  std::vector<TraceSample> warm;
  for (const auto& it : items) {
    TraceSample s;
    s.prompt = it.prompt;
    const auto r = rating_tokens(1.0 + oracle::pick(rng, 40) / 10.0);
    s.completion = {Vocabulary::kRateOpen, r[0], r[1], r[2], Vocabulary::kRateClose, Vocabulary::kEos};
    warm.push_back(s);
  }
  SftConfig sc;
  sc.epochs = 30;
  sc.batch_size = 4;
  sc.optimizer.learning_rate = 0.03;
  const auto init = sft_train(init_policy(d, 3), warm, sc).params;
  GrpoConfig cfg;
  cfg.batch_size = 4;
  cfg.group_size = 4;
  cfg.max_new_tokens = 6;
  cfg.seed = 9;
  cfg.optimizer.learning_rate = 0.05;

  auto run = [&](int threads, std::int64_t stop) {
    GrpoConfig c = cfg;
    c.threads = threads;
    GrpoTrainer t(init, c, RewardConfig{}, TemplateMode::no_think, vocab);
    TrainCallbacks cb;
    cb.stop_after = stop;
    auto reports = train(t, items, cb);
    return std::make_pair(t.params().values, reports);
  };
  const auto [p1, r1] = run(1, -1);
  const auto [p2, r2] = run(3, -1);
  CHECK(r1.size() == 3);
  CHECK(p1 == p2);
  CHECK(p1 != init.values);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(step_report_row(r1[i]) == step_report_row(r2[i]));
  CHECK(r1[0].trajectories == 16);
  std::int64_t degenerate = 0;
  for (const auto& r : r1) degenerate += r.degenerate_groups;
  CHECK(degenerate < 12);

  GrpoTrainer a(init, cfg, RewardConfig{}, TemplateMode::no_think, vocab);
  TrainCallbacks cb;
  cb.stop_after = 1;
  train(a, items, cb);
  GrpoTrainer b(init, cfg, RewardConfig{}, TemplateMode::no_think, vocab);
  b.restore(a.checkpoint(vocab));
  train(b, items, TrainCallbacks{});
  CHECK(b.params().values == p1);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
