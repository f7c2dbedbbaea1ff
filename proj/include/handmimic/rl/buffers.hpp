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

#ifndef HANDMIMIC_RL_BUFFERS_HPP_
#define HANDMIMIC_RL_BUFFERS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

#include "handmimic/errors.hpp"
#include "handmimic/nn.hpp"
#include "handmimic/rl/returns.hpp"

namespace handmimic::rl {

// On-policy storage for one rollout of contiguous steps. Columns are time.
template <typename Scalar>
struct RolloutBuffer {
  nn::Matrix<Scalar> obs;
  nn::Matrix<Scalar> actions;
  std::vector<double> rewards;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  RolloutBuffer(int n_steps, int obs_dim, int action_dim)
      : obs(obs_dim, n_steps), actions(action_dim, n_steps) {
    if (n_steps < 1) throw InvalidSpec("RolloutBuffer needs n_steps >= 1");
    clear();
  }

  int capacity() const { return static_cast<int>(obs.cols()); }
  int size() const { return static_cast<int>(rewards.size()); }
  bool full() const { return size() == capacity(); }

  void clear() {
    rewards.clear();
    log_probs.clear();
    values.clear();
    dones.clear();
    advantages.clear();
    returns.clear();
  }

  void add(const nn::Vector<Scalar>& o, const nn::Vector<Scalar>& a, double r, double log_prob,
           double value, bool done) {
    if (full()) throw InvalidSpec("RolloutBuffer is full");
    const int t = size();
    obs.col(t) = o;
    actions.col(t) = a;
    rewards.push_back(r);
    log_probs.push_back(log_prob);
    values.push_back(value);
    dones.push_back(done ? 1 : 0);
  }

  void compute_advantages(double last_value, double gamma, double lambda) {
    if (!full()) throw InvalidSpec("RolloutBuffer is not full");
    advantages = gae(rewards, values, dones, last_value, gamma, lambda);
    returns.resize(advantages.size());
    for (std::size_t i = 0; i < advantages.size(); ++i) returns[i] = advantages[i] + values[i];
  }
};

template <typename Scalar>
struct ReplayBatch {
  nn::Matrix<Scalar> obs;
  nn::Matrix<Scalar> actions;
  nn::Vector<Scalar> rewards;
  nn::Matrix<Scalar> next_obs;
  nn::Vector<Scalar> dones;
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
template <typename Scalar>
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int obs_dim, int action_dim)
      : obs_(obs_dim, capacity), actions_(action_dim, capacity), rewards_(capacity),
        next_obs_(obs_dim, capacity), dones_(capacity) {
    if (capacity < 1) throw InvalidSpec("ReplayBuffer needs capacity >= 1");
  }

  int capacity() const { return static_cast<int>(obs_.cols()); }
  int size() const { return size_; }

  void add(const nn::Vector<Scalar>& o, const nn::Vector<Scalar>& a, double r,
           const nn::Vector<Scalar>& o2, bool done) {
    obs_.col(head_) = o;
    actions_.col(head_) = a;
    rewards_[head_] = static_cast<Scalar>(r);
    next_obs_.col(head_) = o2;
    dones_[head_] = done ? Scalar(1) : Scalar(0);
    head_ = (head_ + 1) % capacity();
    if (size_ < capacity()) ++size_;
  }

  ReplayBatch<Scalar> sample(int batch_size, std::mt19937_64& rng) const {
    if (size_ == 0) throw InvalidSpec("ReplayBuffer is empty");
    std::uniform_int_distribution<int> pick(0, size_ - 1);
    std::vector<int> idx(batch_size);
    for (int& i : idx) i = pick(rng);
    return gather(idx);
  }

  ReplayBatch<Scalar> gather(const std::vector<int>& idx) const {
    const int b = static_cast<int>(idx.size());
    ReplayBatch<Scalar> out{nn::Matrix<Scalar>(obs_.rows(), b), nn::Matrix<Scalar>(actions_.rows(), b),
                            nn::Vector<Scalar>(b), nn::Matrix<Scalar>(obs_.rows(), b),
                            nn::Vector<Scalar>(b)};
    for (int k = 0; k < b; ++k) {
      const int i = idx[k];
      out.obs.col(k) = obs_.col(i);
      out.actions.col(k) = actions_.col(i);
      out.rewards[k] = rewards_[i];
      out.next_obs.col(k) = next_obs_.col(i);
      out.dones[k] = dones_[i];
    }
    return out;
  }

 private:
  nn::Matrix<Scalar> obs_;
  nn::Matrix<Scalar> actions_;
  nn::Vector<Scalar> rewards_;
  nn::Matrix<Scalar> next_obs_;
  nn::Vector<Scalar> dones_;
  int head_ = 0;
  int size_ = 0;
};

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_BUFFERS_HPP_
