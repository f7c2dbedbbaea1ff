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

#ifndef HANDMIMIC_RL_SWEEP_HPP_
#define HANDMIMIC_RL_SWEEP_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "handmimic/analysis.hpp"
#include "handmimic/bayesopt.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/rl/evaluate.hpp"
#include "handmimic/rl/train.hpp"

namespace handmimic::rl {

// Discrete PPO hyperparameter grid. Every field lists the levels to try.
struct SweepGrid {
  std::vector<double> learning_rate{1e-6, 3e-6, 1e-5, 3e-5};
  std::vector<int> n_steps{512, 1024, 4096};
  std::vector<double> weight_decay{1e-5, 1e-4};
  std::vector<int> batch_size{128, 256, 512};
  std::vector<double> gamma{0.9, 0.95};
  std::vector<double> log_std_init{-3.0, -2.0, -1.0};
  std::vector<int> n_epochs{3, 5, 10};

  std::array<int, 7> levels() const {
    return {static_cast<int>(learning_rate.size()), static_cast<int>(n_steps.size()),
            static_cast<int>(weight_decay.size()),  static_cast<int>(batch_size.size()),
            static_cast<int>(gamma.size()),         static_cast<int>(log_std_init.size()),
            static_cast<int>(n_epochs.size())};
  }

  long size() const {
    long n = 1;
    for (int l : levels()) n *= l;
    return n;
  }

  // Mixed-radix decoding of a flat grid index.
  std::array<int, 7> decode(long index) const {
    std::array<int, 7> idx{};
    const auto lv = levels();
    for (int k = 6; k >= 0; --k) {
      idx[k] = static_cast<int>(index % lv[k]);
      index /= lv[k];
    }
    return idx;
  }

  PpoConfig apply(PpoConfig c, const std::array<int, 7>& idx) const {
    c.learning_rate = learning_rate[idx[0]];
    c.n_steps = n_steps[idx[1]];
    c.weight_decay = weight_decay[idx[2]];
    c.batch_size = batch_size[idx[3]];
    c.gamma = gamma[idx[4]];
    c.log_std_init = log_std_init[idx[5]];
    c.n_epochs = n_epochs[idx[6]];
    return c;
  }

  // One-hot embedding of every categorical level.
  Eigen::VectorXd embed(const std::array<int, 7>& idx) const {
    const auto lv = levels();
    int dim = 0;
    for (int l : lv) dim += l;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    int off = 0;
    for (int k = 0; k < 7; ++k) {
      e[off + idx[k]] = 1.0;
      off += lv[k];
    }
    return e;
  }

  void validate() const {
    for (int l : levels()) {
      if (l < 1) throw InvalidSpec("sweep grid: every parameter needs at least one level");
    }
  }
};

enum class SweepMode { kBayesian, kRandom, kExhaustive };

inline SweepMode sweep_mode_from_string(const std::string& s) {
  if (s == "bayes") return SweepMode::kBayesian;
  if (s == "random") return SweepMode::kRandom;
  if (s == "exhaustive") return SweepMode::kExhaustive;
  throw InvalidSpec("unknown sweep mode '" + s + "' (expected bayes|random|exhaustive)");
}

struct SweepOptions {
  SweepMode mode = SweepMode::kBayesian;
  int budget = 46;
  int initial_points = 8;
  double length_scale = 1.5;  // in one-hot units; sqrt(2) separates one changed level
  std::uint64_t seed = 0;
};

// Score of one grid point: cumulative evaluation reward (higher is better).
using TrialFn = std::function<double(const PpoConfig&)>;

// Trains with `base` modified at the grid point and returns the cumulative
// reward of the deterministic policy over `eval_steps` control steps.
inline TrialFn make_ppo_trial(const EnvSpec& spec, int eval_steps, Precision precision = Precision::kFloat32) {
  return [spec, eval_steps, precision](const PpoConfig& cfg) {
    const TrainOutput out = train_ppo(spec, cfg, "", precision);
    return evaluate(out.policy, spec, eval_steps).cumulative;
  };
}

// Searches the grid and returns one record per trial in evaluation order.
inline std::vector<analysis::SweepRecord> run_sweep(const SweepGrid& grid, const PpoConfig& base,
                                                    const TrialFn& trial, const SweepOptions& opt) {
  grid.validate();
  if (opt.budget < 1) throw InvalidSpec("sweep: budget must be >= 1");
  const long total = grid.size();
  const long budget = std::min<long>(opt.budget, total);
  std::mt19937_64 rng(opt.seed);

  std::vector<long> order;
  if (opt.mode == SweepMode::kExhaustive) {
    for (long i = 0; i < budget; ++i) order.push_back(i);
  } else {
    std::vector<long> all(total);
    for (long i = 0; i < total; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    order = all;
  }

  std::vector<analysis::SweepRecord> records;
  std::vector<long> tried;
  std::vector<double> scores;
  std::vector<char> used(total, 0);
  auto run = [&](long index) {
    const auto idx = grid.decode(index);
    const PpoConfig cfg = grid.apply(base, idx);
    const double score = trial(cfg);
    used[index] = 1;
    tried.push_back(index);
    scores.push_back(score);
    records.push_back(analysis::SweepRecord{cfg.batch_size, cfg.gamma, cfg.learning_rate, cfg.log_std_init,
                                            cfg.n_epochs, cfg.n_steps, cfg.ortho_init, cfg.weight_decay, score});
  };

  if (opt.mode != SweepMode::kBayesian) {
    for (long i = 0; i < budget; ++i) run(order[i]);
    return records;
  }

  const long warmup = std::min<long>(std::max(opt.initial_points, 1), budget);
  for (long i = 0; i < warmup; ++i) run(order[i]);
  while (static_cast<long>(tried.size()) < budget) {
    // GP on negated, standardized scores so EI minimizes.
    const int n = static_cast<int>(tried.size());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = -scores[i];
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / std::max(n - 1, 1));
    y = ((y.array() - mean) / (sd > 1e-12 ? sd : 1.0)).matrix();
    std::vector<Eigen::VectorXd> xs;
    for (long t : tried) xs.push_back(grid.embed(grid.decode(t)));
    const double inv = 1.0 / (2.0 * opt.length_scale * opt.length_scale);
    auto kernel = [inv](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return std::exp(-(a - b).squaredNorm() * inv);
    };
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) K(i, j) = kernel(xs[i], xs[j]);
    }
    K.diagonal().array() += 1e-6;
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) throw SingularKernel("sweep: kernel matrix not positive definite");
    const Eigen::VectorXd alpha = llt.solve(y);
    const double best_y = y.minCoeff();

    long next = -1;
    double best_ei = -1.0;
    Eigen::VectorXd kx(n);
    for (long c = 0; c < total; ++c) {
      if (used[c]) continue;
      const Eigen::VectorXd x = grid.embed(grid.decode(c));
      for (int i = 0; i < n; ++i) kx[i] = kernel(x, xs[i]);
      const double mu = kx.dot(alpha);
      const double var = std::max(1.0 - kx.dot(llt.solve(kx)), 0.0);
      const double ei = bayesopt::expected_improvement(mu, var, best_y);
      if (ei > best_ei) {
        best_ei = ei;
        next = c;
      }
    }
    if (next < 0) break;
    run(next);
  }
  return records;
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_SWEEP_HPP_
