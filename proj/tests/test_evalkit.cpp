#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "reczero/errors.hpp"
#include "reczero/evalkit.hpp"

using namespace reczero;

TEST_CASE("error metrics on fixed vectors") {
  const std::vector<double> t{2.0, 4.0}, y{3.0, 4.0};
  const auto m = error_metrics(t, y);
  CHECK(m.mae == 0.5);
  CHECK(m.rmse == doctest::Approx(0.70710678118654752).epsilon(1e-15));
  const std::vector<double> same{1.5, 2.5, 5.0};
  CHECK(error_metrics(same, same).mae == 0.0);
  CHECK(error_metrics(same, same).rmse == 0.0);
  const std::vector<double> short_y{1.0};
  CHECK_THROWS_AS(error_metrics(t, short_y), ConfigError);
  CHECK_THROWS_AS(error_metrics(std::vector<double>{}, std::vector<double>{}), EmptyDatasetError);
}

TEST_CASE("error metrics match a long double oracle") {
  Rng rng(12);
  for (int k = 0; k < 300; ++k) {
    const int n = 1 + oracle::pick(rng, 50);
    std::vector<double> t, y;
    for (int i = 0; i < n; ++i) {
      t.push_back(1.0 + oracle::pick(rng, 41) / 10.0);
      y.push_back(1.0 + oracle::pick(rng, 41) / 10.0);
    }
    const auto m = error_metrics(t, y);
    const auto o = oracle::mae_rmse(t, y);
    CHECK(std::abs(m.mae - o.first) < 1e-12);
    CHECK(std::abs(m.rmse - o.second) < 1e-12);
    CHECK(m.rmse >= m.mae - 1e-15);
  }
}

TEST_CASE("evaluate: greedy decoding is deterministic and scores the fallback") {
  WorldConfig wc;
  wc.n_users = 6;
  wc.n_items = 30;
  wc.alphabet_size = 6;
  wc.interactions_per_user = 10;
  const World world = generate_world(wc, 4);
  const Vocabulary vocab(6);
  PolicyDescriptor d;
  d.vocab_size = vocab.size();
  d.embed_dim = 4;
  d.hidden_dim = 6;
  d.cell = CellKind::gru;
  const auto p = init_policy(d, 2);
  EvalConfig cfg;
  cfg.max_new_tokens = 20;
  cfg.threads = 1;
  std::vector<Prediction> preds;
  const auto a = evaluate(p, world.examples, cfg, vocab, &preds);
  cfg.threads = 4;
  const auto b = evaluate(p, world.examples, cfg, vocab);
  CHECK(eval_report_row(a) == eval_report_row(b));
  CHECK(a.n == world.examples.size());
  REQUIRE(preds.size() == a.n);

  std::vector<double> t, y;
  std::size_t unparsed = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].target == world.examples[i].rating);
    if (!preds[i].parsed) {
      ++unparsed;
      CHECK(preds[i].predicted == 3.0);
    }
    t.push_back(preds[i].target);
    y.push_back(preds[i].predicted);
  }
  CHECK(a.unparseable_count == unparsed);
  const auto o = oracle::mae_rmse(t, y);
  CHECK(std::abs(a.mae - o.first) < 1e-12);

  cfg.fallback = 1.0;
  const auto c = evaluate(p, world.examples, cfg, vocab);
  if (unparsed > 0) CHECK(c.mae != a.mae);

  CHECK_THROWS_AS(evaluate(p, {}, cfg, vocab), EmptyDatasetError);
}

TEST_CASE("variant settings") {
  CHECK(settings_for(Variant::full).mode == TemplateMode::full);
  CHECK(settings_for(Variant::no_thinking).mode == TemplateMode::no_think);
  CHECK(settings_for(Variant::no_multistep).mode == TemplateMode::single_think);
  CHECK(settings_for(Variant::correctness_only).scheme == RewardScheme::correctness_only);
  CHECK(settings_for(Variant::correctness_only).mode == TemplateMode::full);
  CHECK_FALSE(settings_for(Variant::sft_only).run_rl);
  CHECK(settings_for(Variant::sft_only).run_sft);
  for (Variant v : AblationSpec{}.variants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("bogus"), ConfigError);
}

TEST_CASE("ablation summary averages over seeds") {
  AblationSpec spec;
  std::vector<AblationRow> rows;
  for (std::uint64_t s : spec.seeds)
    for (Variant v : spec.variants) {
      AblationRow r;
      r.variant = v;
      r.seed = s;
      r.report.mae = static_cast<double>(s) + static_cast<int>(v);
      r.report.n = 10;
      rows.push_back(r);
    }
  const auto sum = summarize_ablation(spec, rows);
  REQUIRE(sum.size() == spec.variants.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    CHECK(sum[i].variant == spec.variants[i]);
    CHECK(sum[i].mean_mae == doctest::Approx(2.0 + static_cast<int>(spec.variants[i])));
  }
  const auto csv = ablation_csv(rows);
  CHECK(csv.rfind("variant,seed,mae,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + static_cast<long>(rows.size()));
}

TEST_CASE("cost table columns") {
  CostRow r;
  r.name = "reczero";
  r.training_steps = 300;
  r.trajectories = 300 * 8 * 8;
  const auto csv = cost_csv({r});
  CHECK(csv.find("reczero,0,300,19200,") != std::string::npos);
}
