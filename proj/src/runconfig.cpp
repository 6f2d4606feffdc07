// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "reczero/errors.hpp"
#include "reczero/rng.hpp"

namespace reczero {

void RunConfig::validate() const {
  if (preset != "desk" && preset != "paper") throw ConfigError("must be desk or paper", "preset");
  world.validate();
  if (!(train_fraction > 0.0 && test_fraction > 0.0))
    throw ConfigError("both fractions must be positive", "train_fraction");
  if (std::abs(train_fraction + test_fraction - 1.0) > 1e-9)
    throw ConfigError("train_fraction + test_fraction must equal 1", "test_fraction");
  if (limits.context_limit <= 0) throw ConfigError("must be positive", "context_limit");
  PolicyDescriptor d = policy;
  d.vocab_size = Vocabulary(world.alphabet_size).size();
  d.validate();
  grpo.validate();
  reward.validate();
  teacher.validate();
  sft.validate();
  if (coldstart_samples < 0) throw ConfigError("must be >= 0", "coldstart_samples");
  if (eval_interval < 0) throw ConfigError("must be >= 0", "eval_interval");
  if (eval_subset < 1) throw ConfigError("must be >= 1", "eval_subset");
  if (checkpoint_interval < 0) throw ConfigError("must be >= 0", "checkpoint_interval");
  if (eval.max_new_tokens < 1) throw ConfigError("must be >= 1", "eval_max_new_tokens");
  if (ablation.variants.empty()) throw ConfigError("at least one variant", "ablation_variants");
  if (ablation.seeds.empty()) throw ConfigError("at least one seed", "ablation_seeds");
  if (replicate_seeds.empty()) throw ConfigError("at least one seed", "replicate_seeds");
  if (rl_steps < -1) throw ConfigError("must be -1 or >= 0", "rl_steps");
  if (threads < 0) throw ConfigError("must be >= 0", "threads");
}

RunConfig preset_config(const std::string& preset) {
  RunConfig c;
  c.preset = preset;
  if (preset == "paper") {
    c.grpo = GrpoConfig::paper_preset();
  } else if (preset != "desk") {
    throw ConfigError("unknown preset '" + preset + "'", "preset");
  }
  c.policy.vocab_size = Vocabulary(c.world.alphabet_size).size();
  return c;
}

namespace {

template <class T>
T as(const YAML::Node& n, const std::string& key) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("wrong value type", key);
  }
}

template <class T>
std::vector<T> as_list(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError("expected a list", key);
  std::vector<T> out;
  for (const auto& item : n) out.push_back(as<T>(item, key));
  return out;
}

void apply(RunConfig& c, const std::string& key, const YAML::Node& v) {
  auto real = [&] { return as<double>(v, key); };
  auto integer = [&] { return as<long long>(v, key); };
  auto text = [&] { return as<std::string>(v, key); };
  auto flag = [&] { return as<bool>(v, key); };
  auto count = [&] {
    const long long x = integer();
    if (x < 0 || x > 1000000000) throw ConfigError("out of range", key);
    return static_cast<int>(x);
  };

  if (key == "preset") return;  // handled before the other keys
  if (key == "seed") { c.seed = static_cast<std::uint64_t>(integer()); return; }
  if (key == "n_users") { c.world.n_users = count(); return; }
  if (key == "n_items") { c.world.n_items = count(); return; }
  if (key == "alphabet_size") { c.world.alphabet_size = count(); return; }
  if (key == "attrs_per_item") { c.world.attrs_per_item = count(); return; }
  if (key == "min_history") { c.world.min_history = count(); return; }
  if (key == "max_history") { c.world.max_history = count(); return; }
  if (key == "interactions_per_user") { c.world.interactions_per_user = count(); return; }
  if (key == "scale") { c.world.scale = real(); return; }
  if (key == "noise_std") { c.world.noise_std = real(); return; }
  if (key == "review_threshold") { c.world.review_threshold = real(); return; }
  if (key == "train_fraction") { c.train_fraction = real(); return; }
  if (key == "test_fraction") { c.test_fraction = real(); return; }
  if (key == "context_limit") { c.limits.context_limit = count(); return; }
  if (key == "template_mode") { c.mode = parse_mode(text()); return; }
  if (key == "embed_dim") { c.policy.embed_dim = count(); return; }
  if (key == "hidden_dim") { c.policy.hidden_dim = count(); return; }
  if (key == "layers") { c.policy.layers = count(); return; }
  if (key == "cell") { c.policy.cell = parse_cell(text()); return; }
  if (key == "attention_heads") { c.policy.attention_heads = count(); return; }
  if (key == "attention_dim") { c.policy.attention_dim = count(); return; }
  if (key == "group_size") { c.grpo.group_size = count(); return; }
  if (key == "clip_epsilon") { c.grpo.clip_epsilon = real(); return; }
  if (key == "kl_coefficient") { c.grpo.kl_coefficient = real(); return; }
  if (key == "learning_rate") { c.grpo.optimizer.learning_rate = real(); return; }
  if (key == "optimizer") {
    c.grpo.optimizer.kind = parse_optimizer(text());
    c.sft.optimizer.kind = c.grpo.optimizer.kind;
    return;
  }
  if (key == "beta1") { c.grpo.optimizer.beta1 = c.sft.optimizer.beta1 = real(); return; }
  if (key == "beta2") { c.grpo.optimizer.beta2 = c.sft.optimizer.beta2 = real(); return; }
  if (key == "adam_epsilon") { c.grpo.optimizer.epsilon = c.sft.optimizer.epsilon = real(); return; }
  if (key == "max_grad_norm") { c.grpo.optimizer.max_grad_norm = c.sft.optimizer.max_grad_norm = real(); return; }
  if (key == "batch_size") { c.grpo.batch_size = count(); return; }
  if (key == "epochs") { c.grpo.epochs = count(); return; }
  if (key == "temperature") { c.grpo.temperature = real(); return; }
  if (key == "max_new_tokens") { c.grpo.max_new_tokens = count(); return; }
  if (key == "rl_steps") { c.rl_steps = integer(); return; }
  if (key == "reward_scheme") {
    const auto s = text();
    if (s == "paper") c.reward.scheme = RewardScheme::paper;
    else if (s == "correctness_only") c.reward.scheme = RewardScheme::correctness_only;
    else throw ConfigError("must be paper or correctness_only", key);
    return;
  }
  if (key == "max_error") { c.reward.max_error = real(); return; }
  if (key == "lenient_answer") { c.reward.lenient_answer = flag(); return; }
  if (key == "correctness_reward") { c.reward.correctness_reward = real(); return; }
  if (key == "coldstart_samples") { c.coldstart_samples = count(); return; }
  if (key == "noise_level") { c.teacher.noise_level = real(); return; }
  if (key == "rating_jitter") { c.teacher.rating_jitter = real(); return; }
  if (key == "like_threshold") { c.teacher.like_threshold = real(); return; }
  if (key == "dislike_threshold") { c.teacher.dislike_threshold = real(); return; }
  if (key == "sft_learning_rate") { c.sft.optimizer.learning_rate = real(); return; }
  if (key == "sft_batch_size") { c.sft.batch_size = count(); return; }
  if (key == "sft_epochs") { c.sft.epochs = count(); return; }
  if (key == "eval_decode") {
    const auto s = text();
    if (s == "greedy") c.eval.decode = Decode::greedy;
    else if (s == "sampled") c.eval.decode = Decode::sampled;
    else throw ConfigError("must be greedy or sampled", key);
    return;
  }
  if (key == "eval_max_new_tokens") { c.eval.max_new_tokens = count(); return; }
  if (key == "eval_fallback") { c.eval.fallback = real(); return; }
  if (key == "eval_interval") { c.eval_interval = count(); return; }
  if (key == "eval_subset") { c.eval_subset = count(); return; }
  if (key == "checkpoint_interval") { c.checkpoint_interval = count(); return; }
  if (key == "ablation_variants") {
    c.ablation.variants.clear();
    for (const auto& s : as_list<std::string>(v, key)) c.ablation.variants.push_back(parse_variant(s));
    return;
  }
  if (key == "ablation_seeds") { c.ablation.seeds = as_list<std::uint64_t>(v, key); return; }
  if (key == "replicate_seeds") { c.replicate_seeds = as_list<std::uint64_t>(v, key); return; }
  if (key == "out") { c.out_dir = text(); return; }
  if (key == "threads") { c.threads = count(); return; }
  throw ConfigError("unknown key", key);
}

}  // namespace

RunConfig parse_run_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("not valid YAML: ") + e.what(), "config");
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("top level must be a mapping", "config");
  const std::string preset = root["preset"] ? as<std::string>(root["preset"], "preset") : "desk";
  RunConfig c = preset_config(preset);
  std::set<std::string> seen;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!seen.insert(key).second) throw ConfigError("duplicate key", key);
    apply(c, key, kv.second);
  }
  c.eval.mode = c.mode;
  c.eval.limits = c.limits;
  c.eval.threads = c.threads;
  c.grpo.threads = c.threads;
  c.sft.threads = c.threads;
  c.policy.vocab_size = Vocabulary(c.world.alphabet_size).size();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PrerequisiteError("missing config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string canonical_yaml(const RunConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  auto kv = [&](const char* k, const auto& v) { e << YAML::Key << k << YAML::Value << v; };
  auto real = [&](const char* k, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    e << YAML::Key << k << YAML::Value << std::string(buf);
  };
  kv("preset", c.preset);
  kv("seed", c.seed);
  kv("n_users", c.world.n_users);
  kv("n_items", c.world.n_items);
  kv("alphabet_size", c.world.alphabet_size);
  kv("attrs_per_item", c.world.attrs_per_item);
  kv("min_history", c.world.min_history);
  kv("max_history", c.world.max_history);
  kv("interactions_per_user", c.world.interactions_per_user);
  real("scale", c.world.scale);
  real("noise_std", c.world.noise_std);
  real("review_threshold", c.world.review_threshold);
  real("train_fraction", c.train_fraction);
  real("test_fraction", c.test_fraction);
  kv("context_limit", c.limits.context_limit);
  kv("template_mode", std::string(mode_name(c.mode)));
  kv("embed_dim", c.policy.embed_dim);
  kv("hidden_dim", c.policy.hidden_dim);
  kv("layers", c.policy.layers);
  kv("cell", std::string(cell_name(c.policy.cell)));
  kv("attention_heads", c.policy.attention_heads);
  kv("attention_dim", c.policy.attention_dim);
  kv("group_size", c.grpo.group_size);
  real("clip_epsilon", c.grpo.clip_epsilon);
  real("kl_coefficient", c.grpo.kl_coefficient);
  real("learning_rate", c.grpo.optimizer.learning_rate);
  kv("optimizer", std::string(optimizer_name(c.grpo.optimizer.kind)));
  real("beta1", c.grpo.optimizer.beta1);
  real("beta2", c.grpo.optimizer.beta2);
  real("adam_epsilon", c.grpo.optimizer.epsilon);
  real("max_grad_norm", c.grpo.optimizer.max_grad_norm);
  kv("batch_size", c.grpo.batch_size);
  kv("epochs", c.grpo.epochs);
  real("temperature", c.grpo.temperature);
  kv("max_new_tokens", c.grpo.max_new_tokens);
  kv("rl_steps", c.rl_steps);
  kv("reward_scheme", std::string(c.reward.scheme == RewardScheme::paper ? "paper" : "correctness_only"));
  real("max_error", c.reward.max_error);
  kv("lenient_answer", c.reward.lenient_answer);
  real("correctness_reward", c.reward.correctness_reward);
  kv("coldstart_samples", c.coldstart_samples);
  real("noise_level", c.teacher.noise_level);
  real("rating_jitter", c.teacher.rating_jitter);
  real("like_threshold", c.teacher.like_threshold);
  real("dislike_threshold", c.teacher.dislike_threshold);
  real("sft_learning_rate", c.sft.optimizer.learning_rate);
  kv("sft_batch_size", c.sft.batch_size);
  kv("sft_epochs", c.sft.epochs);
  kv("eval_decode", std::string(c.eval.decode == Decode::greedy ? "greedy" : "sampled"));
  kv("eval_max_new_tokens", c.eval.max_new_tokens);
  real("eval_fallback", c.eval.fallback);
  kv("eval_interval", c.eval_interval);
  kv("eval_subset", c.eval_subset);
  kv("checkpoint_interval", c.checkpoint_interval);
  e << YAML::Key << "ablation_variants" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Variant v : c.ablation.variants) e << std::string(variant_name(v));
  e << YAML::EndSeq;
  e << YAML::Key << "ablation_seeds" << YAML::Value << YAML::Flow << c.ablation.seeds;
  e << YAML::Key << "replicate_seeds" << YAML::Value << YAML::Flow << c.replicate_seeds;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_yaml(cfg))));
  return buf;
}

SeedPlan SeedPlan::from(std::uint64_t global) {
  return {derive_seed(global, "world"), derive_seed(global, "split"),
          derive_seed(global, "coldstart-pool"), derive_seed(global, "eval")};
}

ReplicateSeeds ReplicateSeeds::from(std::uint64_t global, std::uint64_t replicate) {
  return {derive_seed(global, "policy-init", replicate), derive_seed(global, "rollout", replicate),
          derive_seed(global, "teacher", replicate), derive_seed(global, "sft", replicate)};
}

}  // namespace reczero
