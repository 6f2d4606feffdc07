// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Warm start: a scripted teacher over the world's latent affinities writes
// reasoning traces, traces whose rating misses the ground truth are replaced
// by rationalized ones, and the policy is fit to the result by teacher-forced
// maximum likelihood on completion tokens.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "reczero/optimizer.hpp"
#include "reczero/policy.hpp"
#include "reczero/promptkit.hpp"
#include "reczero/tracelang.hpp"
#include "reczero/world.hpp"

namespace reczero {

struct TeacherConfig {
  double noise_level = 0.0;     // per-judgment flip probability
  double rating_jitter = 0.0;   // stddev added before quantization
  double like_threshold = 0.3;
  double dislike_threshold = -0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class TraceOrigin { align, misalign };
std::string_view origin_name(TraceOrigin origin);
TraceOrigin parse_origin(std::string_view name);

struct TraceSample {
  std::vector<TokenId> prompt;
  std::vector<TokenId> completion;  // trace followed by the rating and <eos>
  TraceOrigin origin = TraceOrigin::align;
  double teacher_rating = 3.0;
  double ground_truth = 3.0;
};

// Uniform without replacement; ConfigError if m exceeds the dataset.
std::vector<std::size_t> sample_subset_indices(std::size_t dataset_size, std::size_t m,
                                               std::uint64_t seed);
std::vector<RatingExample> sample_subset(const std::vector<RatingExample>& dataset, std::size_t m,
                                         std::uint64_t seed);

class Teacher {
 public:
  struct Generation {
    std::vector<TokenId> trace;
    double teacher_rating = 3.0;
  };

  // `world` supplies the user profiles and the rating scale; it must outlive
  // the teacher.
  Teacher(const World& world, TeacherConfig cfg, const Vocabulary& vocab,
          TemplateMode mode = TemplateMode::full);

  Generation generate(const RatingExample& example) const;
  std::vector<TokenId> rationalize(const RatingExample& example, double ground_truth) const;

  const TeacherConfig& config() const { return cfg_; }
  TemplateMode mode() const { return mode_; }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  struct Perception {
    std::vector<int> judgment;  // per attribute: +1 like, -1 dislike, 0 neutral
    std::vector<double> affinity;  // affinity as perceived (sign flipped with the judgment)
  };
  Perception perceive(const RatingExample& example, bool noisy) const;
  std::vector<TokenId> render(const RatingExample& example, const Perception& p, double rating,
                              int match_polarity) const;

  const World& world_;
  TeacherConfig cfg_;
  const Vocabulary& vocab_;
  TemplateMode mode_;
};

struct TraceDataset {
  std::vector<TraceSample> align;
  std::vector<TraceSample> misalign;

  std::size_t size() const { return align.size() + misalign.size(); }
  // align followed by misalign
  std::vector<TraceSample> all() const;
};

TraceDataset build_trace_dataset(const Teacher& teacher, const std::vector<RatingExample>& subset,
                                 const PromptLimits& limits, int threads = 0);

// {prompt_text, completion_text, origin, teacher_rating, ground_truth} per line.
void export_traces(const std::vector<TraceSample>& samples, const Vocabulary& vocab,
                   const std::filesystem::path& path);
std::vector<TraceSample> import_traces(const std::filesystem::path& path, const Vocabulary& vocab);

struct SftConfig {
  OptimizerConfig optimizer{};
  int batch_size = 8;
  int epochs = 8;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

// Mean completion-token NLL of `batch`; adds d(loss)/d(params) into `grad`
// when it is non-empty.
double sft_loss(const PolicyParams& params, std::span<const TraceSample> batch,
                std::span<double> grad, int threads = 1);

struct SftResult {
  PolicyParams params;
  std::vector<double> loss_curve;  // one entry per step, before the update
};

SftResult sft_train(PolicyParams params, const std::vector<TraceSample>& samples,
                    const SftConfig& cfg,
                    const std::function<void(std::int64_t, double)>& on_step = {});

}  // namespace reczero
