#pragma once

// Random GRPO groups over micro policies (under 500 parameters) for the
// surrogate checks.

#include <cmath>

#include "oracles.hpp"
#include "reczero/grpo.hpp"
#include "reczero/policy.hpp"

namespace oracle {

struct SurrogateInstance {
  reczero::PolicyParams old_params;
  reczero::PolicyParams new_params;
  reczero::RolloutGroup group;
};

inline reczero::PolicyDescriptor micro_descriptor(int kind) {
  reczero::PolicyDescriptor d;
  d.vocab_size = reczero::Vocabulary(4).size();
  d.embed_dim = kind == 2 ? 2 : 3;
  d.hidden_dim = kind == 2 ? 3 : 4;
  d.cell = kind == 0 ? reczero::CellKind::gru
                     : (kind == 1 ? reczero::CellKind::rnn : reczero::CellKind::attention);
  d.attention_heads = 1;
  d.attention_dim = 2;
  return d;
}

// New parameters sit a small random step away from the sampling policy, so
// some ratios leave the trust region and some stay inside.
inline SurrogateInstance surrogate_instance(std::uint64_t seed, double step = 0.15) {
  Rng rng(seed);
  SurrogateInstance s;
  s.old_params = reczero::init_policy(micro_descriptor(static_cast<int>(seed % 3)), seed);
  s.new_params = s.old_params;
  for (double& x : s.new_params.values) x += step * (2.0 * reczero::uniform01(rng) - 1.0);
  const int G = 2 + pick(rng, 5);
  const int V = s.old_params.descriptor.vocab_size;
  for (int i = 0; i < 3 + pick(rng, 4); ++i) s.group.prompt.push_back(pick(rng, V));
  const auto rollouts = reczero::sample_group(
      s.old_params, s.group.prompt, reczero::SampleOptions{1.0, 1 + pick(rng, 8), false}, G, rng);
  std::vector<double> rewards;
  for (const auto& r : rollouts) {
    s.group.rollouts.push_back(r);
    rewards.push_back(reczero::uniform01(rng) * 2.0 - 0.5);
  }
  s.group.advantages = group_normalize(rewards);
  return s;
}

}  // namespace oracle
