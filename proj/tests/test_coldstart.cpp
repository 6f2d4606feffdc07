#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "fd.hpp"
#include "oracles.hpp"
#include "reczero/coldstart.hpp"
#include "reczero/errors.hpp"

using namespace reczero;

namespace {

WorldConfig small_world(double noise) {
  WorldConfig w;
  w.n_users = 12;
  w.n_items = 60;
  w.alphabet_size = 8;
  w.interactions_per_user = 12;
  w.noise_std = noise;
  return w;
}

double oracle_rating(const std::vector<double>& affinity, const ItemMeta& item, double scale) {
  double s = 0.0;
  for (int a : item.attributes) s += affinity[static_cast<std::size_t>(a)];
  const double raw = std::clamp(3.0 + scale * s / static_cast<double>(item.attributes.size()), 1.0, 5.0);
  return std::round(raw * 10.0) / 10.0;
}

PolicyDescriptor tiny(const Vocabulary& vocab) {
  PolicyDescriptor d;
  d.vocab_size = vocab.size();
  d.embed_dim = 4;
  d.hidden_dim = 6;
  d.cell = CellKind::gru;
  return d;
}

}  // namespace

TEST_CASE("trace dataset partitions the subset") {
  const World world = generate_world(small_world(0.1), 5);
  const Vocabulary vocab(8);
  TeacherConfig tc;
  tc.noise_level = 0.3;
  tc.rating_jitter = 0.2;
  tc.seed = 3;
  for (TemplateMode mode : {TemplateMode::full, TemplateMode::single_think, TemplateMode::no_think}) {
    const Teacher teacher(world, tc, vocab, mode);
    const auto subset = sample_subset(world.examples, 80, 11);
    const auto ds = build_trace_dataset(teacher, subset, PromptLimits{}, 2);
    CHECK(ds.size() == subset.size());
    for (const auto& s : ds.align) {
      CHECK(rating_tenths(s.teacher_rating) == rating_tenths(s.ground_truth));
      CHECK(s.origin == TraceOrigin::align);
    }
    for (const auto& s : ds.misalign) {
      CHECK(rating_tenths(s.teacher_rating) != rating_tenths(s.ground_truth));
      CHECK(s.origin == TraceOrigin::misalign);
    }
    for (const auto& s : ds.all()) {
      CHECK(validate(s.completion, mode, vocab).valid);
      const auto r = extract_rating(s.completion, vocab);
      REQUIRE(r.has_value());
      const double expect = s.origin == TraceOrigin::align ? s.teacher_rating : s.ground_truth;
      CHECK(rating_tenths(*r) == rating_tenths(expect));
    }
    CHECK(ds.misalign.size() > 0);
  }
}

TEST_CASE("a noiseless teacher on a noiseless world never misaligns") {
  const World world = generate_world(small_world(0.0), 9);
  const Vocabulary vocab(8);
  const Teacher teacher(world, TeacherConfig{}, vocab);
  const auto ds = build_trace_dataset(teacher, world.examples, PromptLimits{}, 1);
  CHECK(ds.misalign.empty());
  CHECK(ds.align.size() == world.examples.size());
}

TEST_CASE("full flip probability inverts every judged affinity") {
  const World world = generate_world(small_world(0.0), 9);
  const Vocabulary vocab(8);
  TeacherConfig tc;
  tc.noise_level = 1.0;
  const Teacher teacher(world, tc, vocab);
  for (const auto& ex : world.examples) {
    auto aff = world.user(ex.history.user_id).affinity;
    for (double& a : aff)
      if (a > tc.like_threshold || a < tc.dislike_threshold) a = -a;
    CHECK(teacher.generate(ex).teacher_rating ==
          doctest::Approx(oracle_rating(aff, ex.target, world.config.scale)).epsilon(1e-12));
  }
}

TEST_CASE("rationalized traces carry the ground truth") {
  const World world = generate_world(small_world(0.1), 2);
  const Vocabulary vocab(8);
  const Teacher teacher(world, TeacherConfig{}, vocab);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& ex = world.examples[i];
    for (double y : {1.0, 2.4, 3.0, 4.9, 5.0}) {
      const auto trace = teacher.rationalize(ex, y);
      CHECK(validate(trace, TemplateMode::full, vocab).valid);
      CHECK(rating_tenths(*extract_rating(trace, vocab)) == rating_tenths(y));
    }
  }
}

TEST_CASE("teacher config validation") {
  TeacherConfig tc;
  tc.noise_level = 1.5;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
  tc = TeacherConfig{};
  tc.rating_jitter = -1.0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("subset sampling") {
  const auto a = sample_subset_indices(100, 30, 4);
  CHECK(a == sample_subset_indices(100, 30, 4));
  CHECK(a != sample_subset_indices(100, 30, 5));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 30);
  for (std::size_t i : a) CHECK(i < 100);
  CHECK(sample_subset_indices(10, 10, 1).size() == 10);
  CHECK_THROWS_AS(sample_subset_indices(10, 11, 1), ConfigError);
}

TEST_CASE("traces survive a jsonl round trip") {
  const World world = generate_world(small_world(0.1), 5);
  const Vocabulary vocab(8);
  TeacherConfig tc;
  tc.noise_level = 0.3;
  const Teacher teacher(world, tc, vocab);
  const auto samples = build_trace_dataset(teacher, sample_subset(world.examples, 25, 1), PromptLimits{}).all();
  const auto path = std::filesystem::temp_directory_path() / "reczero_traces_test.jsonl";
  export_traces(samples, vocab, path);
  const auto back = import_traces(path, vocab);
  std::filesystem::remove(path);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].prompt == samples[i].prompt);
    CHECK(back[i].completion == samples[i].completion);
    CHECK(back[i].origin == samples[i].origin);
    CHECK(back[i].teacher_rating == samples[i].teacher_rating);
    CHECK(back[i].ground_truth == samples[i].ground_truth);
  }
}

TEST_CASE("sft loss: value, gradient and prompt masking") {
  const World world = generate_world(small_world(0.1), 5);
  const Vocabulary vocab(8);
  const Teacher teacher(world, TeacherConfig{}, vocab);
  const auto samples = build_trace_dataset(teacher, sample_subset(world.examples, 3, 1), PromptLimits{}).all();
  const auto p = init_policy(tiny(vocab), 7);

  // Untrained policies are near uniform.
  const double l0 = sft_loss(p, samples, {}, 1);
  CHECK(std::abs(l0 - std::log(vocab.size())) < 0.05);

  std::vector<double> g(p.size(), 0.0);
  sft_loss(p, samples, g, 2);
  const auto num = oracle::central_diff(
      [&](const std::vector<double>& x) {
        PolicyParams q = p;
        q.values = x;
        return sft_loss(q, samples, {}, 1);
      },
      p.values);
  CHECK(oracle::relative_error(g, num) < 1e-6);

  // Only completion positions are scored: the loss is the token-mean of
  // the completion log-probs and nothing else.
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    for (double lp : log_probs(p, s.prompt, s.completion)) sum -= lp;
    n += s.completion.size();
  }
  CHECK(l0 == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));

  // A longer prompt changes conditioning but adds no scored tokens.
  auto padded = samples;
  for (auto& s : padded) s.prompt.insert(s.prompt.begin(), Vocabulary::kHist);
  double psum = 0.0;
  for (const auto& s : padded)
    for (double lp : log_probs(p, s.prompt, s.completion)) psum -= lp;
  CHECK(sft_loss(p, padded, {}, 1) == doctest::Approx(psum / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("sft memorizes a single trace") {
  const World world = generate_world(small_world(0.1), 5);
  const Vocabulary vocab(8);
  const Teacher teacher(world, TeacherConfig{}, vocab);
  const auto one = build_trace_dataset(teacher, sample_subset(world.examples, 1, 3), PromptLimits{}).all();
  SftConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 600;
  cfg.optimizer.learning_rate = 0.03;
  cfg.threads = 1;
  const auto res = sft_train(init_policy(tiny(vocab), 1), one, cfg);
  CHECK(res.loss_curve.size() == 600);
  CHECK(res.loss_curve.front() > 3.0);
  CHECK(sft_loss(res.params, one, {}, 1) < 0.05);
}

TEST_CASE("sft is deterministic across thread counts") {
  const World world = generate_world(small_world(0.1), 5);
  const Vocabulary vocab(8);
  const Teacher teacher(world, TeacherConfig{}, vocab);
  const auto samples = build_trace_dataset(teacher, sample_subset(world.examples, 10, 3), PromptLimits{}).all();
  SftConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.seed = 6;
  cfg.threads = 1;
  const auto a = sft_train(init_policy(tiny(vocab), 1), samples, cfg);
  cfg.threads = 3;
  const auto b = sft_train(init_policy(tiny(vocab), 1), samples, cfg);
  CHECK(a.params.values == b.params.values);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK_THROWS_AS(sft_train(init_policy(tiny(vocab), 1), {}, cfg), EmptyDatasetError);
}
