// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "reczero/errors.hpp"

namespace reczero {

PreparedData prepare_data(const RunConfig& cfg) {
  const SeedPlan seeds = SeedPlan::from(cfg.seed);
  PreparedData d;
  d.world = generate_world(cfg.world, seeds.world);
  Split split = split_dataset(d.world, cfg.train_fraction, cfg.test_fraction, seeds.split);
  d.test = std::move(split.test);
  const auto picked = sample_subset_indices(split.train.size(),
                                            static_cast<std::size_t>(cfg.coldstart_samples),
                                            seeds.coldstart_pool);
  std::vector<char> in_pool(split.train.size(), 0);
  for (std::size_t i : picked) {
    in_pool[i] = 1;
    d.coldstart_pool.push_back(split.train[i]);
  }
  for (std::size_t i = 0; i < split.train.size(); ++i)
    if (!in_pool[i]) d.rl_train.push_back(split.train[i]);
  if (d.test.empty()) throw EmptyDatasetError("test split is empty");
  return d;
}

std::vector<TrainItem> train_items(const std::vector<RatingExample>& examples, TemplateMode mode,
                                   const PromptLimits& limits, const Vocabulary& vocab) {
  std::vector<TrainItem> items;
  items.reserve(examples.size());
  for (const auto& e : examples) {
    const RatingExample ex = truncate_history(e, mode, limits, vocab);
    items.push_back({build_prompt(ex, mode, limits, vocab).ids(), e.rating});
  }
  return items;
}

PolicyParams initial_policy(const RunConfig& cfg, std::uint64_t replicate) {
  const Vocabulary vocab(cfg.world.alphabet_size);
  PolicyDescriptor d = cfg.policy;
  d.vocab_size = vocab.size();
  return init_policy(d, ReplicateSeeds::from(cfg.seed, replicate).policy_init, vocab);
}

EvalConfig eval_config(const RunConfig& cfg, TemplateMode mode) {
  EvalConfig e = cfg.eval;
  e.mode = mode;
  e.limits = cfg.limits;
  e.threads = cfg.threads;
  e.seed = SeedPlan::from(cfg.seed).eval;
  return e;
}

TraceDataset coldstart_traces(const RunConfig& cfg, const PreparedData& data, TemplateMode mode,
                              std::uint64_t replicate) {
  const Vocabulary vocab(cfg.world.alphabet_size);
  TeacherConfig tc = cfg.teacher;
  tc.seed = ReplicateSeeds::from(cfg.seed, replicate).teacher;
  const Teacher teacher(data.world, tc, vocab, mode);
  return build_trace_dataset(teacher, data.coldstart_pool, cfg.limits, cfg.threads);
}

SftOutcome run_sft(const RunConfig& cfg, const std::vector<TraceSample>& traces,
                   TemplateMode mode, std::uint64_t replicate, const Logger& log) {
  SftOutcome out;
  for (const auto& t : traces) (t.origin == TraceOrigin::align ? out.n_align : out.n_misalign)++;
  SftConfig sc = cfg.sft;
  sc.seed = ReplicateSeeds::from(cfg.seed, replicate).sft;
  sc.threads = cfg.threads;
  const std::string tag = "sft[" + std::string(mode_name(mode)) + " r" + std::to_string(replicate) + "]";
  SftResult r = sft_train(initial_policy(cfg, replicate), traces, sc,
                          [&](std::int64_t step, double loss) {
                            if (step % 100 == 0) {
                              char buf[96];
                              std::snprintf(buf, sizeof buf, "%s step %lld loss %.4f", tag.c_str(),
                                            static_cast<long long>(step), loss);
                              log(buf);
                            }
                          });
  out.params = std::move(r.params);
  out.loss_curve = std::move(r.loss_curve);
  out.steps = static_cast<std::int64_t>(out.loss_curve.size());
  return out;
}

RlOutcome run_rl(const RunConfig& cfg, const PreparedData& data, PolicyParams init,
                 TemplateMode mode, RewardScheme scheme, std::uint64_t replicate,
                 const RlHooks& hooks) {
  const Vocabulary vocab(cfg.world.alphabet_size);
  GrpoConfig gc = cfg.grpo;
  gc.seed = ReplicateSeeds::from(cfg.seed, replicate).rollout;
  gc.threads = cfg.threads;
  RewardConfig rc = cfg.reward;
  rc.scheme = scheme;
  GrpoTrainer trainer(std::move(init), gc, rc, mode, vocab);
  const auto items = train_items(data.rl_train, mode, cfg.limits, vocab);

  const EvalConfig ec = eval_config(cfg, mode);
  const std::size_t n_curve = std::min<std::size_t>(data.test.size(),
                                                    static_cast<std::size_t>(cfg.eval_subset));
  const std::vector<RatingExample> curve_set(data.test.begin(),
                                             data.test.begin() + static_cast<long>(n_curve));
  RlOutcome out;
  TrainCallbacks cb;
  cb.stop_after = cfg.rl_steps;
  cb.eval_interval = cfg.eval_interval;
  cb.on_eval = [&](std::int64_t step, const PolicyParams& p) {
    out.curve.push_back({step, evaluate(p, curve_set, ec, vocab)});
    char buf[128];
    std::snprintf(buf, sizeof buf, "rl step %lld curve MAE %.4f valid %.3f",
                  static_cast<long long>(step), out.curve.back().report.mae,
                  out.curve.back().report.format_valid_fraction);
    hooks.log(buf);
  };
  cb.on_step = [&](const StepReport& r) {
    if (r.step % 25 == 0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "rl step %lld reward %.4f format %.4f answer %.4f valid %.3f",
                    static_cast<long long>(r.step), r.mean_reward, r.mean_format_reward,
                    r.mean_answer_reward, r.format_valid_fraction);
      hooks.log(buf);
    }
  };
  cb.checkpoint_interval = cfg.checkpoint_interval;
  cb.on_checkpoint = hooks.on_checkpoint;
  out.steps = train(trainer, items, cb);
  if (cb.eval_interval == 0 || out.curve.empty() || out.curve.back().step != trainer.step())
    cb.on_eval(trainer.step(), trainer.params());
  out.final_report = evaluate(trainer.params(), data.test, ec, vocab);
  out.params = trainer.params();
  return out;
}

Experiment::Experiment(RunConfig cfg, Logger log)
    : cfg_(std::move(cfg)), log_(std::move(log)), vocab_(cfg_.world.alphabet_size) {
  cfg_.validate();
  data_ = prepare_data(cfg_);
}

const SftOutcome& Experiment::sft(TemplateMode mode, std::uint64_t replicate) {
  auto& slot = sft_[{mode, replicate}];
  if (!slot) {
    const auto traces = coldstart_traces(cfg_, data_, mode, replicate).all();
    slot = std::make_unique<SftOutcome>(run_sft(cfg_, traces, mode, replicate, log_));
  }
  return *slot;
}

const RlOutcome& Experiment::rl(TemplateMode mode, RewardScheme scheme, bool warm,
                                std::uint64_t replicate) {
  auto& slot = rl_[{mode, scheme, warm, replicate}];
  if (!slot) {
    PolicyParams init = warm ? sft(mode, replicate).params : initial_policy(cfg_, replicate);
    RlHooks hooks;
    const std::string tag = std::string(warm ? "recone" : "reczero") + "[" +
                            std::string(mode_name(mode)) + " r" + std::to_string(replicate) + "] ";
    hooks.log.sink = [&](const std::string& line) { log_(tag + line); };
    slot = std::make_unique<RlOutcome>(
        run_rl(cfg_, data_, std::move(init), mode, scheme, replicate, hooks));
  }
  return *slot;
}

const RlOutcome& Experiment::reczero(std::uint64_t replicate) {
  return rl(cfg_.mode, cfg_.reward.scheme, false, replicate);
}

const RlOutcome& Experiment::recone(std::uint64_t replicate) {
  return rl(cfg_.mode, cfg_.reward.scheme, true, replicate);
}

const EvalReport& Experiment::sft_only(std::uint64_t replicate) {
  auto it = sft_only_.find(replicate);
  if (it == sft_only_.end()) {
    const auto& s = sft(TemplateMode::full, replicate);
    it = sft_only_
             .emplace(replicate,
                      evaluate(s.params, data_.test, eval_config(cfg_, TemplateMode::full), vocab_))
             .first;
  }
  return it->second;
}

AblationRow Experiment::variant(Variant v, std::uint64_t seed) {
  const VariantSettings s = settings_for(v);
  AblationRow row;
  row.variant = v;
  row.seed = seed;
  if (!s.run_rl) {
    row.report = sft_only(seed);
  } else {
    row.report = rl(s.mode, s.scheme, s.run_sft, seed).final_report;
  }
  return row;
}

std::vector<AblationRow> Experiment::ablation() {
  std::vector<AblationRow> rows;
  for (Variant v : cfg_.ablation.variants)
    for (std::uint64_t seed : cfg_.ablation.seeds) rows.push_back(variant(v, seed));
  return rows;
}

namespace {

void add_rl_cost(CostRow& row, const std::vector<StepReport>& steps, int batch_size) {
  for (const auto& s : steps) {
    row.trajectories += s.trajectories;
    row.train_tokens += s.tokens_generated;
  }
  row.training_steps += static_cast<std::int64_t>(steps.size());
  row.samples_used += static_cast<std::int64_t>(steps.size()) * batch_size;
  row.avg_train_tokens =
      row.trajectories > 0 ? static_cast<double>(row.train_tokens) / row.trajectories : 0.0;
}

}  // namespace

CostRow Experiment::cost(Variant v, std::uint64_t seed) {
  const VariantSettings s = settings_for(v);
  CostRow row;
  row.name = std::string(variant_name(v));
  if (s.run_sft) {
    const auto& sf = sft(s.mode, seed);
    row.samples_used += static_cast<std::int64_t>(sf.n_align + sf.n_misalign);
    row.training_steps += sf.steps;
  }
  if (s.run_rl) {
    const auto& r = rl(s.mode, s.scheme, s.run_sft, seed);
    add_rl_cost(row, r.steps, cfg_.grpo.batch_size);
    row.avg_inference_tokens = r.final_report.avg_generated_tokens;
  } else {
    row.avg_inference_tokens = sft_only(seed).avg_generated_tokens;
  }
  return row;
}

CostRow Experiment::reczero_cost(std::uint64_t replicate) {
  CostRow row;
  row.name = "reczero";
  const auto& r = reczero(replicate);
  add_rl_cost(row, r.steps, cfg_.grpo.batch_size);
  row.avg_inference_tokens = r.final_report.avg_generated_tokens;
  return row;
}

std::string steps_csv(const std::vector<StepReport>& steps) {
  std::string out = std::string(step_report_header()) + "\n";
  for (const auto& s : steps) out += step_report_row(s) + "\n";
  return out;
}

std::string curve_csv(const std::vector<std::pair<std::string, std::vector<CurvePoint>>>& runs) {
  std::string out = std::string("run,step,") + eval_report_header() + "\n";
  for (const auto& [name, curve] : runs)
    for (const auto& p : curve)
      out += name + "," + std::to_string(p.step) + "," + eval_report_row(p.report) + "\n";
  return out;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  char buf[48];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", i, losses[i]);
    out += buf;
  }
  return out;
}

RunDir::RunDir(const RunConfig& cfg, bool quiet)
    : path_(cfg.out_dir / config_hash(cfg)), quiet_(quiet) {
  std::filesystem::create_directories(path_);
  lock_ = path_ / "run.lock";
  const int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw PrerequisiteError("run directory " + path_.string() +
                              " is locked by another invocation (remove " + lock_.string() +
                              " if that process is gone)");
    throw PrerequisiteError("cannot create " + lock_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  const auto snapshot = path_ / "config.yaml";
  const std::string yaml = canonical_yaml(cfg);
  std::ofstream(snapshot, std::ios::binary) << yaml;
}

RunDir::~RunDir() {
  std::error_code ec;
  std::filesystem::remove(lock_, ec);
}

void RunDir::write(const std::string& name, const std::string& contents) const {
  const auto p = path_ / name;
  if (std::filesystem::exists(p) && !quiet_)
    std::cerr << "warning: overwriting " << p.string() << "\n";
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw PrerequisiteError("cannot write " + p.string());
  out << contents;
}

void RunDir::require(const std::string& name, const std::string& produced_by) const {
  const auto p = path_ / name;
  if (!std::filesystem::exists(p))
    throw PrerequisiteError("missing " + p.string() + " (run `" + produced_by + "` first)");
}

}  // namespace reczero
