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

#ifndef HANDMIMIC_RL_SAC_HPP_
#define HANDMIMIC_RL_SAC_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
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
#include "handmimic/rl/ppo.hpp"

namespace handmimic::rl {

// log(1 - tanh(u)^2), computed stably.
inline double log_one_minus_tanh_sq(double u) {
  const double x = -2.0 * u;
  const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return 2.0 * (std::log(2.0) - u - softplus);
}

// Reparameterized squashed-Gaussian sample: u = mean + std * noise,
// a = tanh(u), log pi(a) = log N(u) - sum log(1 - tanh(u)^2).
template <typename Scalar>
struct SquashedSample {
  typename nn::Mlp<Scalar>::Tape tape;
  nn::Matrix<Scalar> u;
  nn::Matrix<Scalar> action;
  std::vector<double> log_prob;
};

template <typename Scalar>
SquashedSample<Scalar> squashed_sample(const nn::GaussianPolicy<Scalar>& policy,
                                       const nn::Matrix<Scalar>& obs,
                                       const nn::Matrix<Scalar>& noise) {
  SquashedSample<Scalar> s;
  const nn::Matrix<Scalar> mean = policy.mean_net.forward(obs, s.tape);
  if (noise.rows() != mean.rows() || noise.cols() != mean.cols()) {
    throw ShapeError("squashed_sample: noise shape mismatch");
  }
  const nn::Vector<Scalar> stdv = policy.log_std.array().exp().matrix();
  s.u = mean + (noise.array().colwise() * stdv.array()).matrix();
  s.action = s.u.array().tanh().matrix();
  const double log_std_sum = static_cast<double>(policy.log_std.sum());
  s.log_prob.resize(mean.cols());
  for (Eigen::Index b = 0; b < mean.cols(); ++b) {
    double lp = -static_cast<double>(log_std_sum) - mean.rows() * nn::kHalfLog2Pi;
    for (Eigen::Index i = 0; i < mean.rows(); ++i) {
      const double e = static_cast<double>(noise(i, b));
      lp += -0.5 * e * e - log_one_minus_tanh_sq(static_cast<double>(s.u(i, b)));
    }
    s.log_prob[b] = lp;
  }
  return s;
}

// Stacks observations over actions as Q-network input.
template <typename Scalar>
nn::Matrix<Scalar> critic_input(const nn::Matrix<Scalar>& obs, const nn::Matrix<Scalar>& actions) {
  nn::Matrix<Scalar> x(obs.rows() + actions.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(actions.rows()) = actions;
  return x;
}

// y = r + gamma * (1 - done) * (min(Q1', Q2')(s', a') - alpha * log pi(a'|s'))
template <typename Scalar>
std::vector<double> sac_targets(const nn::GaussianPolicy<Scalar>& policy, const nn::Mlp<Scalar>& q1_target,
                                const nn::Mlp<Scalar>& q2_target, const nn::Matrix<Scalar>& next_obs,
                                const nn::Vector<Scalar>& rewards, const nn::Vector<Scalar>& dones,
                                const nn::Matrix<Scalar>& noise, double alpha, double gamma) {
  const auto s = squashed_sample(policy, next_obs, noise);
  const nn::Matrix<Scalar> x = critic_input(next_obs, s.action);
  const nn::Matrix<Scalar> q1 = q1_target.forward(x);
  const nn::Matrix<Scalar> q2 = q2_target.forward(x);
  std::vector<double> y(next_obs.cols());
  for (Eigen::Index b = 0; b < next_obs.cols(); ++b) {
    const double qmin = std::min(static_cast<double>(q1(0, b)), static_cast<double>(q2(0, b)));
    y[b] = static_cast<double>(rewards[b]) +
           gamma * (1.0 - static_cast<double>(dones[b])) * (qmin - alpha * s.log_prob[b]);
  }
  return y;
}

// 0.5 * (mean (Q1 - y)^2 + mean (Q2 - y)^2)
template <typename Scalar>
double sac_critic_loss(const nn::Mlp<Scalar>& q1, const nn::Mlp<Scalar>& q2, const nn::Matrix<Scalar>& obs,
                       const nn::Matrix<Scalar>& actions, const std::vector<double>& targets,
                       nn::Vector<Scalar>* grad1, nn::Vector<Scalar>* grad2) {
  const nn::Matrix<Scalar> x = critic_input(obs, actions);
  double loss = 0.0;
  const nn::Mlp<Scalar>* nets[2] = {&q1, &q2};
  nn::Vector<Scalar>* grads[2] = {grad1, grad2};
  const double n = static_cast<double>(obs.cols());
  for (int k = 0; k < 2; ++k) {
    typename nn::Mlp<Scalar>::Tape tape;
    const nn::Matrix<Scalar> q = nets[k]->forward(x, tape);
    nn::Matrix<Scalar> dq(1, q.cols());
    for (Eigen::Index b = 0; b < q.cols(); ++b) {
      const double e = static_cast<double>(q(0, b)) - targets[b];
      loss += 0.5 * e * e / n;
      dq(0, b) = static_cast<Scalar>(e / n);
    }
    if (grads[k]) nets[k]->backward(tape, dq, *grads[k]);
  }
  if (!std::isfinite(loss)) throw NonFiniteLoss("SAC critic loss is not finite");
  return loss;
}

// mean_b (alpha * log pi(a_b|s_b) - min(Q1, Q2)(s_b, a_b)), a_b reparameterized.
// The gradient reaches the policy through the critics' input gradients.
template <typename Scalar>
double sac_actor_loss(const nn::GaussianPolicy<Scalar>& policy, const nn::Mlp<Scalar>& q1,
                      const nn::Mlp<Scalar>& q2, const nn::Matrix<Scalar>& obs,
                      const nn::Matrix<Scalar>& noise, double alpha, PolicyGrad<Scalar>* grad,
                      std::vector<double>* log_probs = nullptr) {
  const auto s = squashed_sample(policy, obs, noise);
  const nn::Matrix<Scalar> x = critic_input(obs, s.action);
  typename nn::Mlp<Scalar>::Tape t1;
  typename nn::Mlp<Scalar>::Tape t2;
  const nn::Matrix<Scalar> v1 = q1.forward(x, t1);
  const nn::Matrix<Scalar> v2 = q2.forward(x, t2);
  const Eigen::Index n = obs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  nn::Matrix<Scalar> d1 = nn::Matrix<Scalar>::Zero(1, n);
  nn::Matrix<Scalar> d2 = nn::Matrix<Scalar>::Zero(1, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const bool first = v1(0, b) <= v2(0, b);
    const double qmin = static_cast<double>(first ? v1(0, b) : v2(0, b));
    loss += (alpha * s.log_prob[b] - qmin) * inv_n;
    (first ? d1 : d2)(0, b) = static_cast<Scalar>(-inv_n);
  }
  if (log_probs) *log_probs = s.log_prob;
  if (!std::isfinite(loss)) throw NonFiniteLoss("SAC actor loss is not finite");
  if (!grad) return loss;

  const Eigen::Index obs_dim = obs.rows();
  const Eigen::Index act_dim = noise.rows();
  nn::Vector<Scalar> unused1 = nn::Vector<Scalar>::Zero(q1.num_params());
  nn::Vector<Scalar> unused2 = nn::Vector<Scalar>::Zero(q2.num_params());
  const nn::Matrix<Scalar> dx = q1.backward(t1, d1, unused1) + q2.backward(t2, d2, unused2);
  // dL/du = dL/da * (1 - a^2) + alpha/n * d logp/du, with d logp/du = 2 tanh(u)
  nn::Matrix<Scalar> du = dx.bottomRows(act_dim).cwiseProduct(
      (Scalar(1) - s.action.array().square()).matrix());
  du += static_cast<Scalar>(alpha * inv_n * 2.0) * s.action;
  (void)obs_dim;
  const nn::Vector<Scalar> stdv = policy.log_std.array().exp().matrix();
  // du/dmean = 1; du/dlog_std = std * noise; d logN/dlog_std = -1 per sample
  grad->log_std += (du.cwiseProduct(noise).rowwise().sum()).cwiseProduct(stdv);
  grad->log_std.array() -= static_cast<Scalar>(alpha);
  policy.mean_net.backward(s.tape, du, grad->mean_net);
  return loss;
}

// -mean_b log_alpha * (log pi_b + target_entropy)
inline double sac_alpha_loss(double log_alpha, const std::vector<double>& log_probs, double target_entropy,
                             double* grad) {
  double m = 0.0;
  for (double lp : log_probs) m += lp + target_entropy;
  m /= static_cast<double>(log_probs.size());
  if (grad) *grad += -m;
  return -log_alpha * m;
}

// ---------- trainer ----------

struct SacConfig {
  double learning_rate = 3e-4;
  int buffer_size = 200000;
  double tau = 0.005;
  double gamma = 0.99;
  int batch_size = 256;
  int learning_starts = 100;
  bool auto_alpha = true;
  double alpha = 1.0;  // initial value when auto-tuned
  double target_entropy = std::numeric_limits<double>::quiet_NaN();  // NaN: -action_dim
  double log_std_init = -1.0;
  std::vector<int> hidden{128, 128};
  nn::Activation activation = nn::Activation::kRelu;
  bool normalize_observations = true;
  long total_steps = 50000;
  long eval_interval = 2048;
  int eval_steps = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InvalidSpec("sac: learning_rate must be > 0");
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidSpec("sac: tau must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidSpec("sac: gamma must be in [0, 1]");
    if (batch_size < 1) throw InvalidSpec("sac: batch_size must be >= 1");
    if (buffer_size < batch_size) throw InvalidSpec("sac: buffer_size must be >= batch_size");
    if (!(alpha >= 0.0)) throw InvalidSpec("sac: alpha must be >= 0");
    if (learning_starts < 0) throw InvalidSpec("sac: learning_starts must be >= 0");
    if (total_steps < 0 || eval_interval < 1 || eval_steps < 1) throw InvalidSpec("sac: bad step budget");
    if (hidden.empty()) throw InvalidSpec("sac: need at least one hidden layer");
  }
};

inline nlohmann::json to_json(const SacConfig& c) {
  nlohmann::json te = std::isnan(c.target_entropy) ? nlohmann::json(nullptr) : nlohmann::json(c.target_entropy);
  return {{"learning_rate", c.learning_rate}, {"buffer_size", c.buffer_size},
          {"tau", c.tau},                     {"gamma", c.gamma},
          {"batch_size", c.batch_size},       {"learning_starts", c.learning_starts},
          {"auto_alpha", c.auto_alpha},       {"alpha", c.alpha},
          {"target_entropy", te},             {"log_std_init", c.log_std_init},
          {"hidden", c.hidden},               {"activation", nn::to_string(c.activation)},
          {"normalize_observations", c.normalize_observations},
          {"total_steps", c.total_steps},     {"eval_interval", c.eval_interval},
          {"eval_steps", c.eval_steps},       {"seed", c.seed}};
}

template <typename Scalar>
class SacTrainer {
 public:
  SacTrainer(EnvSpec spec, SacConfig cfg)
      : spec_(std::move(spec)), cfg_(std::move(cfg)), env_(spec_),
        replay_(cfg_.buffer_size, env_.observation_dim(), env_.action_dim()) {
    cfg_.validate();
    std::mt19937_64 seeder(cfg_.seed);
    rng_.seed(seeder());
    const int obs_dim = env_.observation_dim();
    const int act_dim = env_.action_dim();
    policy_ = nn::GaussianPolicy<Scalar>(obs_dim, cfg_.hidden, act_dim, cfg_.activation, cfg_.log_std_init);
    const auto qsizes = nn::GaussianPolicy<Scalar>::Sizes(obs_dim + act_dim, cfg_.hidden, 1);
    q1_ = nn::Mlp<Scalar>(qsizes, cfg_.activation);
    q2_ = nn::Mlp<Scalar>(qsizes, cfg_.activation);
    policy_.mean_net.init(nn::InitScheme::kUniformFanIn, seeder());
    q1_.init(nn::InitScheme::kUniformFanIn, seeder());
    q2_.init(nn::InitScheme::kUniformFanIn, seeder());
    q1_target_ = q1_;
    q2_target_ = q2_;
    log_alpha_ = std::log(std::max(cfg_.alpha, 1e-300));
    target_entropy_ = std::isnan(cfg_.target_entropy) ? -static_cast<double>(act_dim) : cfg_.target_entropy;
    normalizer_ = nn::RunningNormalizer(obs_dim);
    normalizer_.set_enabled(cfg_.normalize_observations);
    opt_mean_ = nn::Adam<Scalar>(policy_.mean_net.num_params(), cfg_.learning_rate);
    opt_log_std_ = nn::Adam<Scalar>(act_dim, cfg_.learning_rate);
    opt_q1_ = nn::Adam<Scalar>(q1_.num_params(), cfg_.learning_rate);
    opt_q2_ = nn::Adam<Scalar>(q2_.num_params(), cfg_.learning_rate);
    opt_alpha_ = nn::Adam<double>(1, cfg_.learning_rate);
  }

  const nn::GaussianPolicy<Scalar>& policy() const { return policy_; }
  const nn::Mlp<Scalar>& q1() const { return q1_; }
  const nn::Mlp<Scalar>& q1_target() const { return q1_target_; }
  double alpha() const { return cfg_.auto_alpha ? std::exp(log_alpha_) : cfg_.alpha; }
  long env_steps() const { return steps_; }

  PolicySnapshot snapshot() const {
    PolicySnapshot s;
    s.algo = "sac";
    s.squash = true;
    s.policy = to_double(policy_);
    s.normalizer = normalizer_;
    s.normalizer.set_frozen(true);
    return s;
  }

  nlohmann::json checkpoint() const {
    return {{"format_version", 1}, {"algo", "sac"},           {"config", to_json(cfg_)},
            {"env_steps", steps_}, {"policy", policy_.to_json()}, {"q1", q1_.to_json()},
            {"q2", q2_.to_json()}, {"q1_target", q1_target_.to_json()},
            {"q2_target", q2_target_.to_json()}, {"log_alpha", log_alpha_},
            {"normalizer", normalizer_.to_json()}};
  }

  void train(LearningCurve& curve) {
    const int act_dim = env_.action_dim();
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
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

      normalizer_.update(raw);
      nn::Vector<Scalar> a(act_dim);
      if (steps_ < cfg_.learning_starts) {
        for (int i = 0; i < act_dim; ++i) a[i] = static_cast<Scalar>(uniform(rng_));
      } else {
        const nn::Matrix<Scalar> o = to_scalar<Scalar>(normalizer_.normalize(raw));
        const auto s = squashed_sample(policy_, o, Noise(act_dim, 1));
        a = s.action.col(0);
      }
      const StepResult r = env_.step(env_.action_from_normalized(a.template cast<double>()));
      stats.reward_sum += r.reward;
      stats.reward_count += 1;
      // Episodes end only on the time limit, which is not a terminal state.
      replay_.add(raw.cast<Scalar>(), a, r.reward, r.observation.cast<Scalar>(), false);
      raw = r.done ? env_.reset(episode_seed_++) : r.observation;
      ++steps_;
      if (steps_ > cfg_.learning_starts && replay_.size() >= cfg_.batch_size) Update(stats);
    }
  }

 private:
  struct Stats {
    double reward_sum = 0.0;
    long reward_count = 0;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    long updates = 0;
  };

  nn::Matrix<Scalar> Noise(int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    nn::Matrix<Scalar> m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = static_cast<Scalar>(normal(rng_));
    return m;
  }

  nn::Matrix<Scalar> Normalize(const nn::Matrix<Scalar>& raw) const {
    return normalizer_.normalize_batch(raw.template cast<double>()).template cast<Scalar>();
  }

  void Update(Stats& stats) {
    const int act_dim = env_.action_dim();
    ReplayBatch<Scalar> batch = replay_.sample(cfg_.batch_size, rng_);
    const nn::Matrix<Scalar> obs = Normalize(batch.obs);
    const nn::Matrix<Scalar> next_obs = Normalize(batch.next_obs);
    const nn::Matrix<Scalar> noise_pi = Noise(act_dim, cfg_.batch_size);
    const nn::Matrix<Scalar> noise_next = Noise(act_dim, cfg_.batch_size);
    const double alpha_now = alpha();

    if (cfg_.auto_alpha) {
      const auto s = squashed_sample(policy_, obs, noise_pi);
      double g = 0.0;
      sac_alpha_loss(log_alpha_, s.log_prob, target_entropy_, &g);
      nn::Vector<double> la(1);
      la[0] = log_alpha_;
      nn::Vector<double> ga(1);
      ga[0] = g;
      opt_alpha_.step(la, ga);
      log_alpha_ = la[0];
    }

    const std::vector<double> y = sac_targets(policy_, q1_target_, q2_target_, next_obs, batch.rewards,
                                              batch.dones, noise_next, alpha_now, cfg_.gamma);
    nn::Vector<Scalar> g1 = nn::Vector<Scalar>::Zero(q1_.num_params());
    nn::Vector<Scalar> g2 = nn::Vector<Scalar>::Zero(q2_.num_params());
    stats.critic_loss += sac_critic_loss(q1_, q2_, obs, batch.actions, y, &g1, &g2);
    opt_q1_.step(q1_.params(), g1);
    opt_q2_.step(q2_.params(), g2);

    PolicyGrad<Scalar> pg(policy_);
    stats.actor_loss += sac_actor_loss(policy_, q1_, q2_, obs, noise_pi, alpha_now, &pg);
    opt_mean_.step(policy_.mean_net.params(), pg.mean_net);
    opt_log_std_.step(policy_.log_std, pg.log_std);

    nn::polyak_update(q1_target_.params(), q1_.params(), cfg_.tau);
    nn::polyak_update(q2_target_.params(), q2_.params(), cfg_.tau);
    stats.updates += 1;
  }

  void Record(LearningCurve& curve, const Stats& s) {
    const EvalResult ev = evaluate(snapshot(), spec_, cfg_.eval_steps);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double u = s.updates > 0 ? static_cast<double>(s.updates) : nan;
    curve.add({static_cast<double>(steps_),
               s.reward_count > 0 ? s.reward_sum / static_cast<double>(s.reward_count) : nan,
               ev.mean_step(), s.actor_loss / u, s.critic_loss / u, policy_.entropy(), alpha()});
  }

  EnvSpec spec_;
  SacConfig cfg_;
  HandEnv env_;
  ReplayBuffer<Scalar> replay_;
  std::mt19937_64 rng_;
  std::uint64_t episode_seed_ = 0;
  long steps_ = 0;
  nn::GaussianPolicy<Scalar> policy_;
  nn::Mlp<Scalar> q1_;
  nn::Mlp<Scalar> q2_;
  nn::Mlp<Scalar> q1_target_;
  nn::Mlp<Scalar> q2_target_;
  double log_alpha_ = 0.0;
  double target_entropy_ = 0.0;
  nn::RunningNormalizer normalizer_;
  nn::Adam<Scalar> opt_mean_;
  nn::Adam<Scalar> opt_log_std_;
  nn::Adam<Scalar> opt_q1_;
  nn::Adam<Scalar> opt_q2_;
  nn::Adam<double> opt_alpha_;
};

inline std::vector<std::string> sac_curve_columns() {
  return {"env_steps", "train_mean_reward", "eval_mean_reward", "actor_loss",
          "critic_loss", "entropy", "alpha"};
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_SAC_HPP_
