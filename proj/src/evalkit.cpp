// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "reczero/errors.hpp"
#include "reczero/grpo.hpp"
#include "reczero/parallel.hpp"

namespace reczero {

ErrorMetrics error_metrics(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size())
    throw ConfigError("targets and predictions differ in length", "predictions");
  if (targets.empty()) throw EmptyDatasetError("no predictions to score");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = targets[i] - predictions[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  const double n = static_cast<double>(targets.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

EvalReport evaluate(const PolicyParams& params, const std::vector<RatingExample>& test_set,
                    const EvalConfig& cfg, const Vocabulary& vocab,
                    std::vector<Prediction>* predictions) {
  if (test_set.empty()) throw EmptyDatasetError("empty test set");
  check_vocabulary(params.descriptor, vocab);
  std::vector<Prediction> preds(test_set.size());
  const SampleOptions opts{cfg.temperature, cfg.max_new_tokens, cfg.decode == Decode::greedy};
  parallel_for(test_set.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const RatingExample ex = truncate_history(test_set[i], cfg.mode, cfg.limits, vocab);
    const auto prompt = build_prompt(ex, cfg.mode, cfg.limits, vocab).ids();
    Rng rng(derive_seed(cfg.seed, "eval", i));
    const Rollout ro = sample(params, prompt, opts, rng);
    Prediction& p = preds[i];
    p.target = test_set[i].rating;
    p.tokens = ro.tokens.size();
    p.valid = validate(ro.tokens, cfg.mode, vocab).valid;
    const auto r = extract_rating(ro.tokens, vocab);
    p.parsed = r.has_value();
    p.predicted = r.value_or(cfg.fallback);
  });
  EvalReport rep;
  rep.n = preds.size();
  std::vector<double> t, y;
  std::size_t valid = 0, tokens = 0;
  for (const auto& p : preds) {
    t.push_back(p.target);
    y.push_back(p.predicted);
    valid += p.valid ? 1 : 0;
    rep.unparseable_count += p.parsed ? 0 : 1;
    tokens += p.tokens;
  }
  const auto m = error_metrics(t, y);
  rep.mae = m.mae;
  rep.rmse = m.rmse;
  rep.format_valid_fraction = static_cast<double>(valid) / static_cast<double>(rep.n);
  rep.avg_generated_tokens = static_cast<double>(tokens) / static_cast<double>(rep.n);
  if (predictions) *predictions = std::move(preds);
  return rep;
}

const char* eval_report_header() {
  return "mae,rmse,n,format_valid_fraction,unparseable_count,avg_generated_tokens";
}

std::string eval_report_row(const EvalReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.mae << ',' << r.rmse << ',' << r.n << ',' << r.format_valid_fraction << ','
     << r.unparseable_count << ',' << r.avg_generated_tokens;
  return os.str();
}

std::string eval_report_text(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "examples        %zu\nMAE             %.4f\nRMSE            %.4f\n"
                "format valid    %.3f\nunparseable     %zu\navg tokens      %.1f\n",
                r.n, r.mae, r.rmse, r.format_valid_fraction, r.unparseable_count,
                r.avg_generated_tokens);
  return buf;
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_thinking: return "no_thinking";
    case Variant::no_multistep: return "no_multistep";
    case Variant::correctness_only: return "correctness_only";
    case Variant::sft_only: return "sft_only";
  }
  return "full";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::full, Variant::no_thinking, Variant::no_multistep,
                    Variant::correctness_only, Variant::sft_only})
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown ablation variant '" + std::string(name) + "'", "ablation_variants");
}

VariantSettings settings_for(Variant v) {
  VariantSettings s;
  switch (v) {
    case Variant::full: break;
    case Variant::no_thinking: s.mode = TemplateMode::no_think; break;
    case Variant::no_multistep: s.mode = TemplateMode::single_think; break;
    case Variant::correctness_only: s.scheme = RewardScheme::correctness_only; break;
    case Variant::sft_only: s.run_rl = false; break;
  }
  return s;
}

std::vector<AblationSummary> summarize_ablation(const AblationSpec& spec,
                                                const std::vector<AblationRow>& rows) {
  std::vector<AblationSummary> out;
  for (Variant v : spec.variants) {
    AblationSummary s;
    s.variant = v;
    int n = 0;
    for (const auto& r : rows) {
      if (r.variant != v) continue;
      s.mean_mae += r.report.mae;
      s.mean_rmse += r.report.rmse;
      s.mean_format_valid += r.report.format_valid_fraction;
      ++n;
    }
    if (n > 0) {
      s.mean_mae /= n;
      s.mean_rmse /= n;
      s.mean_format_valid /= n;
    }
    out.push_back(s);
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,seed," << eval_report_header() << '\n';
  for (const auto& r : rows) os << variant_name(r.variant) << ',' << r.seed << ',' << eval_report_row(r.report) << '\n';
  return os.str();
}

std::string ablation_text(const std::vector<AblationSummary>& summary) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %8s %8s %8s\n", "variant", "MAE", "RMSE", "valid");
  os << buf;
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof buf, "%-18s %8.4f %8.4f %8.3f\n", std::string(variant_name(s.variant)).c_str(),
                  s.mean_mae, s.mean_rmse, s.mean_format_valid);
    os << buf;
  }
  return os.str();
}

std::string cost_csv(const std::vector<CostRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "name,samples_used,training_steps,trajectories,train_tokens,avg_train_tokens,"
        "avg_inference_tokens,inference_stages\n";
  for (const auto& r : rows)
    os << r.name << ',' << r.samples_used << ',' << r.training_steps << ',' << r.trajectories << ','
       << r.train_tokens << ',' << r.avg_train_tokens << ',' << r.avg_inference_tokens << ','
       << r.inference_stages << '\n';
  return os.str();
}

std::string cost_text(const std::vector<CostRow>& rows) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-16s %8s %7s %8s %9s %9s %6s\n", "run", "samples", "steps", "traj",
                "tok/traj", "inf tok", "stages");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %8lld %7lld %8lld %9.1f %9.1f %6d\n", r.name.c_str(),
                  static_cast<long long>(r.samples_used), static_cast<long long>(r.training_steps),
                  static_cast<long long>(r.trajectories), r.avg_train_tokens, r.avg_inference_tokens,
                  r.inference_stages);
    os << buf;
  }
  return os.str();
}

}  // namespace reczero
