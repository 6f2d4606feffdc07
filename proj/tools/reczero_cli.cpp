// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line entry point. Every command reads one flat YAML config, writes
// into <out>/<config-hash>/ and holds that directory's lock while it runs.
//
//   reczero gen-data       --config run.yaml
//   reczero train-reczero  --config run.yaml
//   reczero coldstart-gen  --config run.yaml
//   reczero sft            --config run.yaml
//   reczero train-recone   --config run.yaml
//   reczero eval           --config run.yaml --checkpoint recone
//   reczero ablate         --config run.yaml
//   reczero report         --config run.yaml
//
// Exit codes: 0 ok, 2 config error, 3 missing prerequisite, 4 numerics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "reczero/checkpoint.hpp"
#include "reczero/errors.hpp"
#include "reczero/pipeline.hpp"

using namespace reczero;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  std::optional<std::uint64_t> replicate;
  std::string checkpoint = "recone";
};

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? preset_config("desk") : load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

std::uint64_t replicate_of(const Options& o, const RunConfig& cfg) {
  return o.replicate ? *o.replicate : cfg.replicate_seeds.front();
}

std::string suffix(std::uint64_t replicate) { return "_r" + std::to_string(replicate); }

Logger logger(const Options& o) {
  Logger log;
  if (!o.quiet) log.sink = [](const std::string& line) { std::cerr << line << "\n"; };
  return log;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw PrerequisiteError("missing " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PreparedData load_data(const RunDir& dir) {
  dir.require("data/world.json", "gen-data");
  PreparedData d;
  d.world = import_world(dir / "data/world.json");
  d.rl_train = import_jsonl(dir / "data/rl_train.jsonl");
  d.coldstart_pool = import_jsonl(dir / "data/coldstart_pool.jsonl");
  d.test = import_jsonl(dir / "data/test.jsonl");
  return d;
}

void save_params(const RunDir& dir, const std::string& name, const PolicyParams& params,
                 const Vocabulary& vocab, std::int64_t step) {
  Checkpoint c;
  c.params = params;
  c.vocab_hash = vocab.hash();
  c.step = step;
  std::filesystem::create_directories(dir / "checkpoints");
  save_checkpoint(c, dir / ("checkpoints/" + name + ".ckpt"));
}

void say(const Options& o, const std::string& text) {
  if (!o.quiet) std::cout << text;
}

void cmd_gen_data(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  const PreparedData d = prepare_data(cfg);
  std::filesystem::create_directories(dir / "data");
  export_world(d.world, dir / "data/world.json");
  export_jsonl(d.rl_train, dir / "data/rl_train.jsonl");
  export_jsonl(d.coldstart_pool, dir / "data/coldstart_pool.jsonl");
  export_jsonl(d.test, dir / "data/test.jsonl");
  const Vocabulary vocab(cfg.world.alphabet_size);
  save_vocabulary(vocab, dir / "data/vocab.txt");
  std::ostringstream m;
  m << "split,examples\nrl_train," << d.rl_train.size() << "\ncoldstart_pool,"
    << d.coldstart_pool.size() << "\ntest," << d.test.size() << "\n";
  dir.write("data/manifest.csv", m.str());
  say(o, dir.path().string() + "\n" + m.str());
}

void write_rl(const RunDir& dir, const std::string& name, const RlOutcome& r,
              const Vocabulary& vocab) {
  dir.write("metrics/" + name + "_steps.csv", steps_csv(r.steps));
  dir.write("metrics/" + name + "_curve.csv", curve_csv({{name, r.curve}}));
  dir.write("reports/" + name + "_eval.csv",
            std::string(eval_report_header()) + "\n" + eval_report_row(r.final_report) + "\n");
  dir.write("reports/" + name + "_eval.txt", eval_report_text(r.final_report));
  save_params(dir, name, r.params, vocab, static_cast<std::int64_t>(r.steps.size()));
}

void cmd_train(const Options& o, bool warm) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  const std::uint64_t rep = replicate_of(o, cfg);
  const Vocabulary vocab(cfg.world.alphabet_size);
  const PreparedData d = load_data(dir);
  PolicyParams init;
  if (warm) {
    const std::string sft_name = "checkpoints/sft" + suffix(rep) + ".ckpt";
    dir.require(sft_name, "sft");
    init = load_checkpoint(dir / sft_name, vocab).params;
  } else {
    init = initial_policy(cfg, rep);
  }
  const std::string name = std::string(warm ? "recone" : "reczero") + suffix(rep);
  RlHooks hooks;
  hooks.log = logger(o);
  hooks.on_checkpoint = [&](const GrpoTrainer& t) {
    std::filesystem::create_directories(dir / "checkpoints");
    save_checkpoint(t.checkpoint(vocab),
                    dir / ("checkpoints/" + name + "_step" + std::to_string(t.step()) + ".ckpt"));
  };
  const RlOutcome r =
      run_rl(cfg, d, std::move(init), cfg.mode, cfg.reward.scheme, rep, hooks);
  write_rl(dir, name, r, vocab);
  say(o, name + "\n" + eval_report_text(r.final_report));
}

void cmd_coldstart_gen(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  const std::uint64_t rep = replicate_of(o, cfg);
  const Vocabulary vocab(cfg.world.alphabet_size);
  const PreparedData d = load_data(dir);
  const TraceDataset ds = coldstart_traces(cfg, d, cfg.mode, rep);
  std::filesystem::create_directories(dir / "data");
  export_traces(ds.all(), vocab, dir / ("data/traces" + suffix(rep) + ".jsonl"));
  std::ostringstream m;
  m << "origin,samples\nalign," << ds.align.size() << "\nmisalign," << ds.misalign.size() << "\n";
  dir.write("data/traces" + suffix(rep) + "_manifest.csv", m.str());
  say(o, m.str());
}

void cmd_sft(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  const std::uint64_t rep = replicate_of(o, cfg);
  const Vocabulary vocab(cfg.world.alphabet_size);
  const std::string traces = "data/traces" + suffix(rep) + ".jsonl";
  dir.require(traces, "coldstart-gen");
  const auto samples = import_traces(dir / traces, vocab);
  const SftOutcome s = run_sft(cfg, samples, cfg.mode, rep, logger(o));
  dir.write("metrics/sft" + suffix(rep) + "_loss.csv", loss_csv(s.loss_curve));
  save_params(dir, "sft" + suffix(rep), s.params, vocab, s.steps);
  say(o, "sft steps " + std::to_string(s.steps) + "\n");
}

void cmd_eval(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  const std::uint64_t rep = replicate_of(o, cfg);
  const Vocabulary vocab(cfg.world.alphabet_size);
  const PreparedData d = load_data(dir);
  const std::string name = o.checkpoint + suffix(rep);
  const std::string ckpt = "checkpoints/" + name + ".ckpt";
  dir.require(ckpt, o.checkpoint == "sft" ? "sft" : "train-" + o.checkpoint);
  const EvalReport r =
      evaluate(load_checkpoint(dir / ckpt, vocab).params, d.test, eval_config(cfg, cfg.mode), vocab);
  dir.write("reports/" + name + "_eval.csv",
            std::string(eval_report_header()) + "\n" + eval_report_row(r) + "\n");
  dir.write("reports/" + name + "_eval.txt", eval_report_text(r));
  say(o, eval_report_text(r));
}

void cmd_ablate(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  Experiment ex(cfg, logger(o));
  const auto rows = ex.ablation();
  const auto summary = summarize_ablation(cfg.ablation, rows);
  std::vector<CostRow> costs;
  const std::uint64_t first = cfg.ablation.seeds.front();
  for (Variant v : cfg.ablation.variants) costs.push_back(ex.cost(v, first));
  dir.write("reports/ablation.csv", ablation_csv(rows));
  dir.write("reports/ablation.txt", ablation_text(summary));
  dir.write("reports/cost.csv", cost_csv(costs));
  dir.write("reports/cost.txt", cost_text(costs));
  say(o, ablation_text(summary) + "\n" + cost_text(costs));
}

// Merges the per-replicate curves into one CSV and prints RecZero vs RecOne
// MAE per logged step.
void cmd_report(const Options& o) {
  const RunConfig cfg = resolve(o);
  RunDir dir(cfg, o.quiet);
  std::string merged;
  std::string text = "replicate,step,reczero_mae,recone_mae\n";
  bool any = false;
  for (std::uint64_t rep : cfg.replicate_seeds) {
    const std::string z = "metrics/reczero" + suffix(rep) + "_curve.csv";
    const std::string one = "metrics/recone" + suffix(rep) + "_curve.csv";
    if (!std::filesystem::exists(dir / z) || !std::filesystem::exists(dir / one)) continue;
    any = true;
    for (const auto& f : {z, one}) {
      std::istringstream in(read_file(dir / f));
      std::string line;
      bool header = true;
      while (std::getline(in, line)) {
        if (header) {
          if (merged.empty()) merged = line + "\n";
          header = false;
          continue;
        }
        merged += line + "\n";
      }
    }
    auto mae_by_step = [&](const std::string& f) {
      std::map<long long, std::string> out;
      std::istringstream in(read_file(dir / f));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (cells.size() > 2) out[std::stoll(cells[1])] = cells[2];
      }
      return out;
    };
    const auto a = mae_by_step(z), b = mae_by_step(one);
    for (const auto& [step, mae] : a) {
      const auto it = b.find(step);
      if (it != b.end())
        text += std::to_string(rep) + "," + std::to_string(step) + "," + mae + "," + it->second + "\n";
    }
  }
  if (!any)
    throw PrerequisiteError("no replicate has both reczero and recone curves in " +
                            dir.path().string() + " (run train-reczero and train-recone first)");
  dir.write("reports/curves.csv", merged);
  dir.write("reports/reczero_vs_recone.csv", text);
  say(o, text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RecZero/RecOne desk-scale trainer"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "flat YAML config file");
    sub->add_option("--seed", o.seed, "global seed (overrides the file)");
    sub->add_option("--out", o.out, "output root (overrides the file)");
    sub->add_flag("--quiet", o.quiet, "suppress progress output");
  };
  auto replicate = [&](CLI::App* sub) {
    sub->add_option("--replicate", o.replicate, "replicate seed (default: first replicate_seeds entry)");
  };

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic world and splits");
  auto* zero = app.add_subcommand("train-reczero", "GRPO from a random init");
  auto* cold = app.add_subcommand("coldstart-gen", "teacher traces for the warm start");
  auto* sft = app.add_subcommand("sft", "supervised warm start on teacher traces");
  auto* one = app.add_subcommand("train-recone", "GRPO from the SFT checkpoint");
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  auto* abl = app.add_subcommand("ablate", "train and evaluate the ablation variants");
  auto* rep = app.add_subcommand("report", "merge RecZero and RecOne curves");
  for (auto* s : {gen, zero, cold, sft, one, ev, abl, rep}) common(s);
  for (auto* s : {zero, cold, sft, one, ev}) replicate(s);
  ev->add_option("--checkpoint", o.checkpoint, "reczero, recone or sft")
      ->check(CLI::IsMember({"reczero", "recone", "sft"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) cmd_gen_data(o);
    else if (*zero) cmd_train(o, false);
    else if (*cold) cmd_coldstart_gen(o);
    else if (*sft) cmd_sft(o);
    else if (*one) cmd_train(o, true);
    else if (*ev) cmd_eval(o);
    else if (*abl) cmd_ablate(o);
    else if (*rep) cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const PrerequisiteError& e) {
    std::cerr << "missing prerequisite: " << e.what() << "\n";
    return 3;
  } catch (const NumericsError& e) {
    std::cerr << "numerics error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
