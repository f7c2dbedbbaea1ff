// Copyright 2026 The handmimic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HANDMIMIC_RL_RETURNS_HPP_
#define HANDMIMIC_RL_RETURNS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "handmimic/errors.hpp"

namespace handmimic::rl {

// dones[t] != 0 means the episode ended after step t, so nothing past t is
// credited to it. `bootstrap` is V of the state following the last step and
// is only used when that step is not terminal.
inline std::vector<double> discounted_return(std::span<const double> rewards,
                                             std::span<const std::uint8_t> dones, double gamma,
                                             double bootstrap = 0.0) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidSpec("gamma must be in [0, 1]");
  if (!dones.empty() && dones.size() != rewards.size()) {
    throw DimensionError("discounted_return: rewards and dones differ in length");
  }
  std::vector<double> out(rewards.size());
  double running = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (!dones.empty() && dones[i]) running = 0.0;
    running = rewards[i] + gamma * running;
    out[i] = running;
  }
  return out;
}

inline std::vector<double> discounted_return(std::span<const double> rewards, double gamma) {
  return discounted_return(rewards, {}, gamma, 0.0);
}

// Generalized advantage estimation. values[t] = V(s_t); last_value = V(s_n).
inline std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                               std::span<const std::uint8_t> dones, double last_value, double gamma,
                               double lambda) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidSpec("gamma must be in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidSpec("lambda must be in [0, 1]");
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw DimensionError("gae: length mismatch");
  std::vector<double> adv(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_value = i + 1 == n ? last_value : values[i + 1];
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    running = delta + gamma * lambda * not_done * running;
    adv[i] = running;
  }
  return adv;
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_RETURNS_HPP_
