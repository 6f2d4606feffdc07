// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/coldstart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <json.hpp>

#include "reczero/errors.hpp"
#include "reczero/grpo.hpp"
#include "reczero/parallel.hpp"
#include "reczero/rng.hpp"
#include "reczero/tape.hpp"

namespace reczero {

using nlohmann::json;

void TeacherConfig::validate() const {
  if (!(noise_level >= 0.0 && noise_level <= 1.0)) throw ConfigError("must lie in [0, 1]", "noise_level");
  if (!(rating_jitter >= 0.0)) throw ConfigError("must be >= 0", "rating_jitter");
  if (!(like_threshold >= 0.0)) throw ConfigError("must be >= 0", "like_threshold");
  if (!(dislike_threshold <= 0.0)) throw ConfigError("must be <= 0", "dislike_threshold");
}

std::string_view origin_name(TraceOrigin origin) {
  return origin == TraceOrigin::align ? "align" : "misalign";
}

TraceOrigin parse_origin(std::string_view name) {
  if (name == "align") return TraceOrigin::align;
  if (name == "misalign") return TraceOrigin::misalign;
  throw ConfigError("unknown trace origin '" + std::string(name) + "'", "origin");
}

std::vector<std::size_t> sample_subset_indices(std::size_t dataset_size, std::size_t m,
                                               std::uint64_t seed) {
  if (m > dataset_size)
    throw ConfigError("subset of " + std::to_string(m) + " exceeds the " +
                          std::to_string(dataset_size) + " available examples",
                      "coldstart_samples");
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "subset"));
  // Partial Fisher-Yates: the first m slots are a uniform sample.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

std::vector<RatingExample> sample_subset(const std::vector<RatingExample>& dataset, std::size_t m,
                                         std::uint64_t seed) {
  std::vector<RatingExample> out;
  out.reserve(m);
  for (std::size_t i : sample_subset_indices(dataset.size(), m, seed)) out.push_back(dataset[i]);
  return out;
}

Teacher::Teacher(const World& world, TeacherConfig cfg, const Vocabulary& vocab, TemplateMode mode)
    : world_(world), cfg_(cfg), vocab_(vocab), mode_(mode) {
  cfg_.validate();
}

Teacher::Perception Teacher::perceive(const RatingExample& ex, bool noisy) const {
  const auto& truth = world_.user(ex.history.user_id).affinity;
  Perception p;
  p.judgment.assign(truth.size(), 0);
  p.affinity = truth;
  Rng rng(derive_seed(cfg_.seed, "teacher", static_cast<std::uint64_t>(ex.history.user_id),
                      static_cast<std::uint64_t>(ex.target.item_id)));
  for (std::size_t a = 0; a < truth.size(); ++a) {
    const double u = uniform01(rng);
    int j = 0;
    if (truth[a] > cfg_.like_threshold) j = 1;
    if (truth[a] < cfg_.dislike_threshold) j = -1;
    if (noisy && j != 0 && u < cfg_.noise_level) {
      j = -j;
      p.affinity[a] = -truth[a];
    }
    p.judgment[a] = j;
  }
  return p;
}

std::vector<TokenId> Teacher::render(const RatingExample& ex, const Perception& p, double rating,
                                     int match_polarity) const {
  std::vector<TokenId> out;
  auto judged = [&](const std::vector<int>& attrs, int sign) {
    for (int a : attrs)
      if (p.judgment[static_cast<std::size_t>(a)] == sign) out.push_back(vocab_.attr(a));
  };
  std::vector<int> seen;
  for (const auto& ev : ex.history.events) seen.insert(seen.end(), ev.item.attributes.begin(), ev.item.attributes.end());
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  auto summary = [&] {
    out.push_back(Vocabulary::kPos);
    judged(seen, 1);
    out.push_back(Vocabulary::kNeg);
    judged(seen, -1);
  };

  if (mode_ == TemplateMode::full) {
    out.push_back(Vocabulary::kAnalyzeUserOpen);
    for (const auto& ev : ex.history.events) {
      out.push_back(Vocabulary::kLike);
      judged(ev.item.attributes, 1);
      out.push_back(Vocabulary::kDislike);
      judged(ev.item.attributes, -1);
    }
    summary();
    out.push_back(Vocabulary::kAnalyzeUserClose);

    out.push_back(Vocabulary::kAnalyzeItemOpen);
    out.push_back(Vocabulary::kLike);
    judged(ex.target.attributes, 1);
    out.push_back(Vocabulary::kDislike);
    judged(ex.target.attributes, -1);
    out.push_back(Vocabulary::kAnalyzeItemClose);

    std::vector<int> pos, neg;
    for (int a : ex.target.attributes) {
      const int j = p.judgment[static_cast<std::size_t>(a)];
      if (j > 0) pos.push_back(a);
      if (j < 0) neg.push_back(a);
    }
    auto by_strength = [&](int x, int y) {
      return std::abs(p.affinity[static_cast<std::size_t>(x)]) >
             std::abs(p.affinity[static_cast<std::size_t>(y)]);
    };
    std::stable_sort(pos.begin(), pos.end(), by_strength);
    std::stable_sort(neg.begin(), neg.end(), by_strength);
    out.push_back(Vocabulary::kMatchOpen);
    out.push_back(Vocabulary::kPos);
    if (match_polarity >= 0)
      for (int a : pos) out.push_back(vocab_.attr(a));
    out.push_back(Vocabulary::kNeg);
    if (match_polarity <= 0)
      for (int a : neg) out.push_back(vocab_.attr(a));
    out.push_back(Vocabulary::kMatchClose);
  } else if (mode_ == TemplateMode::single_think) {
    out.push_back(Vocabulary::kThinkOpen);
    summary();
    out.push_back(Vocabulary::kThinkClose);
  }
  out.push_back(Vocabulary::kRateOpen);
  for (TokenId t : rating_tokens(rating)) out.push_back(t);
  out.push_back(Vocabulary::kRateClose);
  out.push_back(Vocabulary::kEos);
  return out;
}

Teacher::Generation Teacher::generate(const RatingExample& ex) const {
  const Perception p = perceive(ex, true);
  Rng rng(derive_seed(cfg_.seed, "jitter", static_cast<std::uint64_t>(ex.history.user_id),
                      static_cast<std::uint64_t>(ex.target.item_id)));
  double jitter = 0.0;
  if (cfg_.rating_jitter > 0.0) jitter = std::normal_distribution<double>(0.0, cfg_.rating_jitter)(rng);
  Generation g;
  g.teacher_rating = rating_from_affinity(p.affinity, ex.target, world_.config.scale, jitter);
  g.trace = render(ex, p, g.teacher_rating, 0);
  return g;
}

std::vector<TokenId> Teacher::rationalize(const RatingExample& ex, double ground_truth) const {
  const Perception p = perceive(ex, false);
  const double y = quantize_rating(ground_truth);
  return render(ex, p, y, y >= 3.0 ? 1 : -1);
}

std::vector<TraceSample> TraceDataset::all() const {
  std::vector<TraceSample> out = align;
  out.insert(out.end(), misalign.begin(), misalign.end());
  return out;
}

TraceDataset build_trace_dataset(const Teacher& teacher, const std::vector<RatingExample>& subset,
                                 const PromptLimits& limits, int threads) {
  std::vector<TraceSample> samples(subset.size());
  parallel_for(subset.size(), resolve_threads(threads), [&](std::size_t i) {
    // The trace covers exactly the history that fits in the prompt.
    const RatingExample ex = truncate_history(subset[i], teacher.mode(), limits, teacher.vocab());
    TraceSample& s = samples[i];
    s.prompt = build_prompt(ex, teacher.mode(), limits, teacher.vocab()).ids();
    s.ground_truth = quantize_rating(ex.rating);
    const auto gen = teacher.generate(ex);
    s.teacher_rating = gen.teacher_rating;
    if (rating_tenths(gen.teacher_rating) == rating_tenths(s.ground_truth)) {
      s.origin = TraceOrigin::align;
      s.completion = gen.trace;
    } else {
      s.origin = TraceOrigin::misalign;
      s.completion = teacher.rationalize(ex, s.ground_truth);
    }
  });
  TraceDataset ds;
  for (auto& s : samples) (s.origin == TraceOrigin::align ? ds.align : ds.misalign).push_back(std::move(s));
  return ds;
}

void export_traces(const std::vector<TraceSample>& samples, const Vocabulary& vocab,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string(), "out");
  for (const auto& s : samples) {
    json j{{"prompt_text", detokenize(s.prompt, vocab)},
           {"completion_text", detokenize(s.completion, vocab)},
           {"origin", std::string(origin_name(s.origin))},
           {"teacher_rating", s.teacher_rating},
           {"ground_truth", s.ground_truth}};
    out << j.dump() << '\n';
  }
}

std::vector<TraceSample> import_traces(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PrerequisiteError("missing trace dataset " + path.string());
  std::vector<TraceSample> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      TraceSample s;
      s.prompt = tokenize(j.at("prompt_text").get<std::string>(), vocab);
      s.completion = tokenize(j.at("completion_text").get<std::string>(), vocab);
      s.origin = parse_origin(j.at("origin").get<std::string>());
      s.teacher_rating = j.at("teacher_rating").get<double>();
      s.ground_truth = j.at("ground_truth").get<double>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), no);
    }
  }
  return out;
}

void SftConfig::validate() const {
  optimizer.validate();
  if (batch_size < 1) throw ConfigError("must be >= 1", "sft_batch_size");
  if (epochs < 1) throw ConfigError("must be >= 1", "sft_epochs");
  if (threads < 0) throw ConfigError("must be >= 0", "threads");
}

double sft_loss(const PolicyParams& params, std::span<const TraceSample> batch, std::span<double> grad,
                int threads) {
  std::size_t tokens = 0;
  for (const auto& s : batch) tokens += s.completion.size();
  if (tokens == 0) throw EmptyDatasetError("SFT batch has no completion tokens");
  const double inv = 1.0 / static_cast<double>(tokens);
  const bool want_grad = !grad.empty();
  std::vector<double> nll(batch.size(), 0.0);
  std::vector<std::vector<double>> grads(want_grad ? batch.size() : 0);
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    const TraceSample& s = batch[b];
    check_tokens(s.prompt, params.descriptor.vocab_size);
    check_tokens(s.completion, params.descriptor.vocab_size);
    Tape tape(params.values);
    const auto lps = taped_log_probs(tape, params, s.prompt, s.completion);
    const std::vector<double> w(lps.size(), -inv);
    Var loss = tape.weighted_sum(lps, w);
    nll[b] = tape.scalar(loss);
    if (want_grad) {
      grads[b].assign(params.size(), 0.0);
      tape.backward(loss, grads[b]);
    }
  });
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    total += nll[b];
    if (want_grad)
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += grads[b][k];
  }
  return total;
}

SftResult sft_train(PolicyParams params, const std::vector<TraceSample>& samples, const SftConfig& cfg,
                    const std::function<void(std::int64_t, double)>& on_step) {
  cfg.validate();
  if (samples.empty()) throw EmptyDatasetError("empty SFT dataset");
  SftResult res;
  Optimizer opt(cfg.optimizer, params.size());
  const int threads = resolve_threads(cfg.threads);
  const auto per_epoch =
      static_cast<std::int64_t>((samples.size() + cfg.batch_size - 1) / cfg.batch_size);
  const std::int64_t steps = per_epoch * cfg.epochs;
  std::vector<TraceSample> batch;
  std::vector<double> grad(params.size());
  for (std::int64_t step = 0; step < steps; ++step) {
    batch.clear();
    for (std::size_t i : batch_indices(samples.size(), cfg.batch_size, step, derive_seed(cfg.seed, "sft")))
      batch.push_back(samples[i]);
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = sft_loss(params, batch, grad, threads);
    if (!std::isfinite(loss)) throw NumericsError("non-finite SFT loss at step " + std::to_string(step));
    for (double g : grad)
      if (!std::isfinite(g)) throw NumericsError("non-finite SFT gradient at step " + std::to_string(step));
    opt.step(params.values, grad);
    res.loss_curve.push_back(loss);
    if (on_step) on_step(step, loss);
  }
  res.params = std::move(params);
  return res;
}

}  // namespace reczero
