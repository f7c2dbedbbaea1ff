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

#ifndef HANDMIMIC_RL_PPO_HPP_
#define HANDMIMIC_RL_PPO_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "handmimic/env.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/nn.hpp"
#include "handmimic/rl/buffers.hpp"
#include "handmimic/rl/curve.hpp"
#include "handmimic/rl/evaluate.hpp"

namespace handmimic::rl {

// ---------- losses ----------

inline double ppo_clip_objective(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

// d/d(ratio) of ppo_clip_objective; the unclipped branch wins ties.
inline double ppo_clip_objective_grad(double ratio, double advantage, double clip) {
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage;
  return unclipped <= clipped ? advantage : 0.0;
}

template <typename Scalar>
struct PolicyGrad {
  nn::Vector<Scalar> mean_net;
  nn::Vector<Scalar> log_std;

  explicit PolicyGrad(const nn::GaussianPolicy<Scalar>& p)
      : mean_net(nn::Vector<Scalar>::Zero(p.mean_net.num_params())),
        log_std(nn::Vector<Scalar>::Zero(p.log_std.size())) {}
};

// Batch log-densities plus what backward needs.
template <typename Scalar>
struct LogProbPass {
  typename nn::Mlp<Scalar>::Tape tape;
  nn::Matrix<Scalar> z;  // (a - mean) / std
  std::vector<double> log_prob;
};

template <typename Scalar>
LogProbPass<Scalar> log_prob_forward(const nn::GaussianPolicy<Scalar>& policy,
                                     const nn::Matrix<Scalar>& obs,
                                     const nn::Matrix<Scalar>& actions) {
  LogProbPass<Scalar> pass;
  const nn::Matrix<Scalar> mean = policy.mean_net.forward(obs, pass.tape);
  if (actions.rows() != mean.rows() || actions.cols() != mean.cols()) {
    throw ShapeError("log_prob_forward: action batch shape mismatch");
  }
  const nn::Vector<Scalar> inv_std = (-policy.log_std.array()).exp().matrix();
  pass.z = (actions - mean).array().colwise() * inv_std.array();
  const double log_std_sum = static_cast<double>(policy.log_std.sum());
  const int d = static_cast<int>(mean.rows());
  pass.log_prob.resize(mean.cols());
  for (Eigen::Index b = 0; b < mean.cols(); ++b) {
    pass.log_prob[b] = -0.5 * static_cast<double>(pass.z.col(b).squaredNorm()) - log_std_sum -
                       d * nn::kHalfLog2Pi;
  }
  return pass;
}

// Accumulates gradients of sum_b dlogp[b] * log_prob[b].
template <typename Scalar>
void log_prob_backward(const nn::GaussianPolicy<Scalar>& policy, const LogProbPass<Scalar>& pass,
                       const std::vector<double>& dlogp, PolicyGrad<Scalar>& grad) {
  const Eigen::Index n = pass.z.cols();
  nn::Vector<Scalar> w(n);
  for (Eigen::Index b = 0; b < n; ++b) w[b] = static_cast<Scalar>(dlogp[b]);
  const nn::Vector<Scalar> inv_std = (-policy.log_std.array()).exp().matrix();
  // d logp / d mean = z / std, d logp / d log_std = z^2 - 1
  nn::Matrix<Scalar> dmean = (pass.z.array().colwise() * inv_std.array()).rowwise() * w.transpose().array();
  grad.log_std += ((pass.z.array().square() - Scalar(1)).rowwise() * w.transpose().array()).rowwise().sum().matrix();
  policy.mean_net.backward(pass.tape, dmean, grad.mean_net);
}

// sum_b weights[b] * log pi(a_b | s_b), with optional gradient.
template <typename Scalar>
double weighted_log_prob(const nn::GaussianPolicy<Scalar>& policy, const nn::Matrix<Scalar>& obs,
                         const nn::Matrix<Scalar>& actions, const std::vector<double>& weights,
                         PolicyGrad<Scalar>* grad) {
  const auto pass = log_prob_forward(policy, obs, actions);
  double total = 0.0;
  for (std::size_t b = 0; b < weights.size(); ++b) total += weights[b] * pass.log_prob[b];
  if (grad) log_prob_backward(policy, pass, weights, *grad);
  return total;
}

// Entropy depends on log_std only; its gradient there is 1 per dimension.
template <typename Scalar>
double policy_entropy(const nn::GaussianPolicy<Scalar>& policy, PolicyGrad<Scalar>* grad) {
  if (grad) grad->log_std.array() += Scalar(1);
  return policy.entropy();
}

// mean_b (V(s_b) - R_b)^2
template <typename Scalar>
double value_loss(const nn::Mlp<Scalar>& value, const nn::Matrix<Scalar>& obs,
                  const std::vector<double>& returns, nn::Vector<Scalar>* grad) {
  typename nn::Mlp<Scalar>::Tape tape;
  const nn::Matrix<Scalar> v = value.forward(obs, tape);
  const double n = static_cast<double>(v.cols());
  nn::Matrix<Scalar> dv(1, v.cols());
  double loss = 0.0;
  for (Eigen::Index b = 0; b < v.cols(); ++b) {
    const double e = static_cast<double>(v(0, b)) - returns[b];
    loss += e * e / n;
    dv(0, b) = static_cast<Scalar>(2.0 * e / n);
  }
  if (grad) value.backward(tape, dv, *grad);
  return loss;
}

struct PpoLossTerms {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

template <typename Scalar>
struct PpoMinibatch {
  nn::Matrix<Scalar> obs;
  nn::Matrix<Scalar> actions;
  std::vector<double> old_log_prob;
  std::vector<double> advantages;
  std::vector<double> returns;
};

// total = -mean(min(rA, clip(r)A)) + vf_coef * value_loss - ent_coef * H
template <typename Scalar>
PpoLossTerms ppo_loss(const nn::GaussianPolicy<Scalar>& policy, const nn::Mlp<Scalar>& value,
                      const PpoMinibatch<Scalar>& mb, double clip, double vf_coef, double ent_coef,
                      PolicyGrad<Scalar>* policy_grad, nn::Vector<Scalar>* value_grad) {
  const auto pass = log_prob_forward(policy, mb.obs, mb.actions);
  const std::size_t n = pass.log_prob.size();
  PpoLossTerms out;
  std::vector<double> dlogp(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double log_ratio = pass.log_prob[b] - mb.old_log_prob[b];
    const double ratio = std::exp(log_ratio);
    out.policy_loss -= ppo_clip_objective(ratio, mb.advantages[b], clip) / n;
    dlogp[b] = -ppo_clip_objective_grad(ratio, mb.advantages[b], clip) * ratio / n;
    out.approx_kl += ((ratio - 1.0) - log_ratio) / n;
    if (std::abs(ratio - 1.0) > clip) out.clip_fraction += 1.0 / n;
  }
  if (policy_grad) log_prob_backward(policy, pass, dlogp, *policy_grad);
  out.entropy = policy.entropy();
  if (policy_grad && ent_coef != 0.0) policy_grad->log_std.array() -= static_cast<Scalar>(ent_coef);
  nn::Vector<Scalar> vgrad;
  out.value_loss = value_loss(value, mb.obs, mb.returns, value_grad ? &vgrad : nullptr);
  if (value_grad) {
    if (value_grad->size() != vgrad.size()) *value_grad = nn::Vector<Scalar>::Zero(vgrad.size());
    *value_grad += static_cast<Scalar>(vf_coef) * vgrad;
  }
  out.total = out.policy_loss + vf_coef * out.value_loss - ent_coef * out.entropy;
  if (!std::isfinite(out.total)) throw NonFiniteLoss("PPO loss is not finite");
  return out;
}

// ---------- trainer ----------

struct PpoConfig {
  double learning_rate = 3e-4;
  int n_steps = 2048;
  int batch_size = 64;
  int n_epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;
  double log_std_init = 0.0;
  bool ortho_init = true;
  double weight_decay = 0.0;
  std::vector<int> hidden{256, 128};
  nn::Activation activation = nn::Activation::kTanh;
  bool normalize_observations = true;
  long total_steps = 200000;
  long eval_interval = 2048;
  int eval_steps = 2000;
  std::uint64_t seed = 0;

  // Best row of the published hyperparameter sweep.
  static PpoConfig table_a1_best() {
    PpoConfig c;
    c.batch_size = 128;
    c.gamma = 0.9;
    c.learning_rate = 1e-5;
    c.log_std_init = -2.0;
    c.n_epochs = 10;
    c.n_steps = 1024;
    c.ortho_init = false;
    c.weight_decay = 1e-5;
    return c;
  }

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidSpec("ppo: learning_rate must be > 0");
    if (n_steps < 1 || batch_size < 1 || n_epochs < 1) throw InvalidSpec("ppo: n_steps, batch_size, n_epochs must be >= 1");
    if (batch_size > n_steps) throw InvalidSpec("ppo: batch_size must not exceed n_steps");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidSpec("ppo: gamma must be in [0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw InvalidSpec("ppo: gae_lambda must be in [0, 1]");
    if (!(clip_ratio > 0.0)) throw InvalidSpec("ppo: clip_ratio must be > 0");
    if (weight_decay < 0.0) throw InvalidSpec("ppo: weight_decay must be >= 0");
    if (total_steps < 0 || eval_interval < 1 || eval_steps < 1) throw InvalidSpec("ppo: bad step budget");
    if (hidden.empty()) throw InvalidSpec("ppo: need at least one hidden layer");
  }
};

inline nlohmann::json to_json(const PpoConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"n_steps", c.n_steps},
          {"batch_size", c.batch_size},       {"n_epochs", c.n_epochs},
          {"gamma", c.gamma},                 {"gae_lambda", c.gae_lambda},
          {"clip_ratio", c.clip_ratio},       {"ent_coef", c.ent_coef},
          {"vf_coef", c.vf_coef},             {"max_grad_norm", c.max_grad_norm},
          {"log_std_init", c.log_std_init},   {"ortho_init", c.ortho_init},
          {"weight_decay", c.weight_decay},   {"hidden", c.hidden},
          {"activation", nn::to_string(c.activation)},
          {"normalize_observations", c.normalize_observations},
          {"total_steps", c.total_steps},     {"eval_interval", c.eval_interval},
          {"eval_steps", c.eval_steps},       {"seed", c.seed}};
}

template <typename Scalar>
nn::Vector<Scalar> to_scalar(const Eigen::VectorXd& v) {
  return v.cast<Scalar>();
}

template <typename Scalar>
nn::GaussianPolicy<double> to_double(const nn::GaussianPolicy<Scalar>& p) {
  return nn::GaussianPolicy<double>::from_json(p.to_json());
}

template <typename Scalar>
class PpoTrainer {
 public:
  PpoTrainer(EnvSpec spec, PpoConfig cfg) : spec_(std::move(spec)), cfg_(std::move(cfg)), env_(spec_) {
    cfg_.validate();
    std::mt19937_64 seeder(cfg_.seed);
    rng_.seed(seeder());
    const int obs_dim = env_.observation_dim();
    const int act_dim = env_.action_dim();
    policy_ = nn::GaussianPolicy<Scalar>(obs_dim, cfg_.hidden, act_dim, cfg_.activation, cfg_.log_std_init);
    value_ = nn::Mlp<Scalar>(nn::GaussianPolicy<Scalar>::Sizes(obs_dim, cfg_.hidden, 1), cfg_.activation);
    if (cfg_.ortho_init) {
      policy_.mean_net.init(nn::InitScheme::kOrthogonal, seeder(), std::sqrt(2.0), 0.01);
      value_.init(nn::InitScheme::kOrthogonal, seeder(), std::sqrt(2.0), 1.0);
    } else {
      policy_.mean_net.init(nn::InitScheme::kUniformFanIn, seeder());
      value_.init(nn::InitScheme::kUniformFanIn, seeder());
    }
    normalizer_ = nn::RunningNormalizer(obs_dim);
    normalizer_.set_enabled(cfg_.normalize_observations);
    opt_mean_ = nn::Adam<Scalar>(policy_.mean_net.num_params(), cfg_.learning_rate, cfg_.weight_decay);
    opt_log_std_ = nn::Adam<Scalar>(act_dim, cfg_.learning_rate, cfg_.weight_decay);
    opt_value_ = nn::Adam<Scalar>(value_.num_params(), cfg_.learning_rate, cfg_.weight_decay);
  }

  const nn::GaussianPolicy<Scalar>& policy() const { return policy_; }
  const nn::Mlp<Scalar>& value() const { return value_; }
  const nn::RunningNormalizer& normalizer() const { return normalizer_; }
  long env_steps() const { return steps_; }

  PolicySnapshot snapshot() const {
    PolicySnapshot s;
    s.algo = "ppo";
    s.squash = false;
    s.policy = to_double(policy_);
    s.normalizer = normalizer_;
    s.normalizer.set_frozen(true);
    return s;
  }

  nlohmann::json checkpoint() const {
    return {{"format_version", 1}, {"algo", "ppo"}, {"config", to_json(cfg_)},
            {"env_steps", steps_}, {"policy", policy_.to_json()},
            {"value", value_.to_json()}, {"normalizer", normalizer_.to_json()}};
  }

  // Runs to total_steps; evaluation rows are appended to `curve`.
  void train(LearningCurve& curve) {
    const int obs_dim = env_.observation_dim();
    const int act_dim = env_.action_dim();
    RolloutBuffer<Scalar> buffer(cfg_.n_steps, obs_dim, act_dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd raw = env_.reset(episode_seed_++);
    long next_eval = 0;
    Stats stats;
    while (true) {
      if (steps_ >= next_eval) {
        Record(curve, stats);
        stats = Stats{};
        next_eval += cfg_.eval_interval;
      }
      if (steps_ >= cfg_.total_steps) break;

      buffer.clear();
      for (int t = 0; t < cfg_.n_steps; ++t) {
        normalizer_.update(raw);
        const nn::Vector<Scalar> o = to_scalar<Scalar>(normalizer_.normalize(raw));
        const nn::Vector<Scalar> mean = policy_.mean_net.forward(o);
        nn::Vector<Scalar> u(act_dim);
        for (int i = 0; i < act_dim; ++i) {
          u[i] = mean[i] + std::exp(policy_.log_std[i]) * static_cast<Scalar>(normal(rng_));
        }
        const double logp = nn::gaussian_logprob_entropy<Scalar>(mean, policy_.log_std, u).log_prob;
        const double v = static_cast<double>(value_.forward(o)(0, 0));
        const Eigen::VectorXd un = u.template cast<double>().cwiseMax(-1.0).cwiseMin(1.0);
        StepResult r = env_.step(env_.action_from_normalized(un));
        double reward = r.reward;
        stats.reward_sum += r.reward;
        stats.reward_count += 1;
        if (r.done) {
          // Time limit, not a terminal state: bootstrap from the final state.
          const nn::Vector<Scalar> of = to_scalar<Scalar>(normalizer_.normalize(r.observation));
          reward += cfg_.gamma * static_cast<double>(value_.forward(of)(0, 0));
        }
        buffer.add(o, u, reward, logp, v, r.done);
        raw = r.done ? env_.reset(episode_seed_++) : r.observation;
        ++steps_;
      }
      const nn::Vector<Scalar> olast = to_scalar<Scalar>(normalizer_.normalize(raw));
      buffer.compute_advantages(static_cast<double>(value_.forward(olast)(0, 0)), cfg_.gamma,
                                cfg_.gae_lambda);
      Update(buffer, stats);
    }
  }

 private:
  struct Stats {
    double reward_sum = 0.0;
    long reward_count = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double approx_kl = 0.0;
    double clip_fraction = 0.0;
    long updates = 0;
  };

  void Update(const RolloutBuffer<Scalar>& buffer, Stats& stats) {
    const int n = buffer.size();
    std::vector<int> perm(n);
    for (int epoch = 0; epoch < cfg_.n_epochs; ++epoch) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng_);
      for (int start = 0; start < n; start += cfg_.batch_size) {
        const int b = std::min(cfg_.batch_size, n - start);
        PpoMinibatch<Scalar> mb{nn::Matrix<Scalar>(buffer.obs.rows(), b),
                                nn::Matrix<Scalar>(buffer.actions.rows(), b), {}, {}, {}};
        mb.old_log_prob.resize(b);
        mb.advantages.resize(b);
        mb.returns.resize(b);
        for (int k = 0; k < b; ++k) {
          const int i = perm[start + k];
          mb.obs.col(k) = buffer.obs.col(i);
          mb.actions.col(k) = buffer.actions.col(i);
          mb.old_log_prob[k] = buffer.log_probs[i];
          mb.advantages[k] = buffer.advantages[i];
          mb.returns[k] = buffer.returns[i];
        }
        NormalizeAdvantages(mb.advantages);
        PolicyGrad<Scalar> pg(policy_);
        nn::Vector<Scalar> vg = nn::Vector<Scalar>::Zero(value_.num_params());
        const PpoLossTerms terms =
            ppo_loss(policy_, value_, mb, cfg_.clip_ratio, cfg_.vf_coef, cfg_.ent_coef, &pg, &vg);
        nn::clip_grad_norm<Scalar>({&pg.mean_net, &pg.log_std, &vg}, cfg_.max_grad_norm);
        opt_mean_.step(policy_.mean_net.params(), pg.mean_net);
        opt_log_std_.step(policy_.log_std, pg.log_std);
        opt_value_.step(value_.params(), vg);
        stats.policy_loss += terms.policy_loss;
        stats.value_loss += terms.value_loss;
        stats.approx_kl += terms.approx_kl;
        stats.clip_fraction += terms.clip_fraction;
        stats.updates += 1;
      }
    }
  }

  static void NormalizeAdvantages(std::vector<double>& adv) {
    if (adv.size() < 2) return;
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(adv.size() - 1));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  void Record(LearningCurve& curve, const Stats& s) {
    const EvalResult ev = evaluate(snapshot(), spec_, cfg_.eval_steps);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double u = s.updates > 0 ? static_cast<double>(s.updates) : nan;
    curve.add({static_cast<double>(steps_),
               s.reward_count > 0 ? s.reward_sum / static_cast<double>(s.reward_count) : nan,
               ev.mean_step(), s.policy_loss / u, s.value_loss / u,
               policy_.entropy(), s.approx_kl / u, s.clip_fraction / u});
  }

  EnvSpec spec_;
  PpoConfig cfg_;
  HandEnv env_;
  std::mt19937_64 rng_;
  std::uint64_t episode_seed_ = 0;
  long steps_ = 0;
  nn::GaussianPolicy<Scalar> policy_;
  nn::Mlp<Scalar> value_;
  nn::RunningNormalizer normalizer_;
  nn::Adam<Scalar> opt_mean_;
  nn::Adam<Scalar> opt_log_std_;
  nn::Adam<Scalar> opt_value_;
};

inline std::vector<std::string> ppo_curve_columns() {
  return {"env_steps", "train_mean_reward", "eval_mean_reward", "policy_loss",
          "value_loss", "entropy", "approx_kl", "clip_fraction"};
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_PPO_HPP_
