// Copyright 2026 The reczero Authors
// SPDX-License-Identifier: Apache-2.0

#include "reczero/rng.hpp"

#include <sstream>

#include "reczero/errors.hpp"

namespace reczero {

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw ConfigError("corrupt RNG state");
}

}  // namespace reczero
