// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary checkpoint, all integers and reals little-endian:
//
//   magic     8 bytes  "RZCKPT\0\1"
//   version   u32      = 1
//   vocab_size, embed_dim, hidden_dim, layers, cell   5 x i32 (cell: 0 gru, 1 rnn)
//   vocab_hash u64     FNV-1a of the vocabulary manifest
//   step       i64     training steps completed
//   n_params   u64, then n_params x f64
//   opt_kind   u32 (0 adam, 1 sgd), opt_t u64,
//   m_len u64, m_len x f64, v_len u64, v_len x f64
//   rng_len    u64, then rng_len bytes (textual mt19937_64 state)

#include <cstdint>
#include <filesystem>
#include <string>

#include "reczero/optimizer.hpp"
#include "reczero/policy.hpp"
#include "reczero/tracelang.hpp"

namespace reczero {

struct Checkpoint {
  PolicyParams params;
  std::uint64_t vocab_hash = 0;
  std::int64_t step = 0;
  OptimizerKind optimizer_kind = OptimizerKind::adam;
  OptimizerState optimizer;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws PrerequisiteError if missing, ConfigError on a corrupt file or a
// vocabulary-hash mismatch with `vocab`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab);

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace reczero
