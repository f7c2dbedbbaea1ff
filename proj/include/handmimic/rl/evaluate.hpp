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

#ifndef HANDMIMIC_RL_EVALUATE_HPP_
#define HANDMIMIC_RL_EVALUATE_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "handmimic/env.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/nn.hpp"

namespace handmimic::rl {

// Maps (env, observation) to a joint-angle target.
using Actor = std::function<JointVector(const HandEnv&, const Eigen::VectorXd&)>;

struct EvalResult {
  double cumulative = 0.0;
  int steps = 0;
  double mean_step() const { return steps > 0 ? cumulative / steps : 0.0; }
};

// One episode of `steps` control steps from phase 0 at rest on frame 0.
inline EvalResult run_episode(EnvSpec spec, int steps, const Actor& actor) {
  if (steps < 0) throw InvalidSpec("evaluation steps must be >= 0");
  EvalResult out;
  if (steps == 0) return out;
  spec.episode.episode_steps = steps;
  spec.episode.init_mode = InitMode::kFixedZero;
  HandEnv env(std::move(spec));
  Eigen::VectorXd obs = env.reset(0);
  for (int t = 0; t < steps; ++t) {
    const StepResult r = env.step(actor(env, obs));
    out.cumulative += r.reward;
    obs = r.observation;
  }
  out.steps = steps;
  return out;
}

// Ideal retargeting: the upcoming reference pose is the PD target.
inline EvalResult retarget_baseline(const EnvSpec& spec, int steps = 2000) {
  return run_episode(spec, steps, [](const HandEnv& env, const Eigen::VectorXd&) {
    return env.next_reference_pose();
  });
}

// Uniform random joint targets within the limits.
inline EvalResult random_baseline(const EnvSpec& spec, int steps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return run_episode(spec, steps, [&](const HandEnv& env, const Eigen::VectorXd&) {
    Eigen::VectorXd a(env.action_dim());
    for (int i = 0; i < a.size(); ++i) a[i] = u(rng);
    return env.action_from_normalized(a);
  });
}

// Deterministic (mean-action) policy restored from a checkpoint.
// PPO clamps the Gaussian sample to [-1, 1]; SAC squashes it with tanh.
struct PolicySnapshot {
  std::string algo;
  bool squash = false;
  nn::GaussianPolicy<double> policy;
  nn::RunningNormalizer normalizer;

  Eigen::VectorXd normalized_action(const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd o = normalizer.normalize(obs);
    Eigen::VectorXd u = policy.mean_net.forward(o);
    if (squash) return u.array().tanh().matrix();
    return u.cwiseMax(-1.0).cwiseMin(1.0);
  }

  Actor actor() const {
    return [this](const HandEnv& env, const Eigen::VectorXd& obs) {
      return env.action_from_normalized(normalized_action(obs));
    };
  }
};

inline EvalResult evaluate(const PolicySnapshot& policy, const EnvSpec& spec, int steps = 2000) {
  return run_episode(spec, steps, policy.actor());
}

struct SeedSummary {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

inline SeedSummary summarize(std::vector<double> values) {
  SeedSummary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  double sum = 0.0;
  for (double v : s.values) sum += v;
  s.mean = sum / static_cast<double>(s.values.size());
  if (s.values.size() > 1) {
    double sq = 0.0;
    for (double v : s.values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.values.size() - 1));
  }
  return s;
}

inline SeedSummary evaluate_seeds(const std::vector<PolicySnapshot>& policies, const EnvSpec& spec,
                                  int steps = 2000) {
  std::vector<double> v;
  for (const auto& p : policies) v.push_back(evaluate(p, spec, steps).cumulative);
  return summarize(std::move(v));
}

// One line of the motion / retargeting / PPO / SAC comparison.
struct ComparisonRow {
  std::string motion;
  double retargeting = 0.0;
  SeedSummary ppo;
  SeedSummary sac;
};

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "motion,retargeting,ppo_mean,ppo_std,sac_mean,sac_std\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.motion << ',' << r.retargeting << ',' << r.ppo.mean << ',' << r.ppo.stddev << ','
       << r.sac.mean << ',' << r.sac.stddev << '\n';
  }
}

inline std::string render_comparison_markdown(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(0);
  os << "| Motion | Retargeting | PPO | SAC |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    os << "| " << r.motion << " | " << r.retargeting << " | " << r.ppo.mean << " ± " << r.ppo.stddev
       << " | " << r.sac.mean << " ± " << r.sac.stddev << " |\n";
  }
  return os.str();
}

// Published per-letter results over 10 seeds, shipped for report rendering.
inline std::vector<ComparisonRow> published_letter_results() {
  auto row = [](const char* m, double ret, double pm, double ps, double sm, double ss) {
    ComparisonRow r;
    r.motion = m;
    r.retargeting = ret;
    r.ppo.mean = pm;
    r.ppo.stddev = ps;
    r.sac.mean = sm;
    r.sac.stddev = ss;
    return r;
  };
  return {row("A", 1905, 1700, 106, 1661, 62), row("B", 1941, 1920, 35, 1878, 186),
          row("C", 1899, 1833, 37, 1873, 34),  row("D", 1876, 1828, 32, 1887, 19),
          row("E", 1915, 1705, 87, 1803, 98),  row("F", 1915, 1893, 38, 1929, 57)};
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_EVALUATE_HPP_
