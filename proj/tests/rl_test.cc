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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "gradient_suite.hpp"
#include "handmimic/rl/returns.hpp"
#include "handmimic/rl/sweep.hpp"
#include "handmimic/rl/train.hpp"

namespace handmimic::rl {
namespace {

std::vector<double> RandomVec(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

TEST(DiscountedReturn, ClosedFormCases) {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_EQ(discounted_return(ones, 0.9)[0], 2.71);
  const std::vector<double> r{0.5, -2.0, 3.0};
  EXPECT_EQ(discounted_return(r, 0.0), r);
  EXPECT_EQ(discounted_return(std::vector<double>(17, 1.0), 1.0)[0], 17.0);
}

TEST(DiscountedReturn, ResetsAtEpisodeEnds) {
  const std::vector<double> r{1.0, 1.0, 1.0, 1.0};
  const std::vector<std::uint8_t> d{0, 1, 0, 0};
  const auto out = discounted_return(r, d, 0.5, 10.0);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
  EXPECT_DOUBLE_EQ(out[0], 1.5);
  EXPECT_DOUBLE_EQ(out[3], 1.0 + 0.5 * 10.0);
  EXPECT_THROW(discounted_return(r, 1.5), InvalidSpec);
}

TEST(Gae, SingleStepIsTdError) {
  const std::vector<double> r{0.7}, v{0.2};
  const std::vector<std::uint8_t> open{0}, closed{1};
  EXPECT_DOUBLE_EQ(gae(r, v, open, 1.5, 0.9, 0.95)[0], 0.7 + 0.9 * 1.5 - 0.2);
  EXPECT_DOUBLE_EQ(gae(r, v, closed, 1.5, 0.9, 0.95)[0], 0.7 - 0.2);
}

TEST(Gae, LambdaOneIsReturnMinusValue) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 5 + trial % 7;
    const auto r = RandomVec(n, rng), v = RandomVec(n, rng);
    std::vector<std::uint8_t> d(n, 0);
    if (trial % 3 == 0) d[n / 2] = 1;
    const double last = RandomVec(1, rng)[0];
    const auto adv = gae(r, v, d, last, 0.97, 1.0);
    // Brute force: R_t = sum_k gamma^k r_{t+k} up to the episode end, then bootstrap.
    for (int t = 0; t < n; ++t) {
      double ret = 0.0, disc = 1.0;
      int k = t;
      for (; k < n; ++k) {
        ret += disc * r[k];
        disc *= 0.97;
        if (d[k]) break;
      }
      if (k == n) ret += disc * last;
      EXPECT_NEAR(adv[t], ret - v[t], 1e-9);
    }
  }
}

TEST(Gae, ZeroValueLambdaOneEqualsDiscountedReturn) {
  const std::vector<double> r{1.0, 0.5, -0.25, 2.0};
  const std::vector<double> zero(4, 0.0);
  const std::vector<std::uint8_t> d(4, 0);
  const auto adv = gae(r, zero, d, 0.0, 0.9, 1.0);
  const auto ret = discounted_return(r, 0.9);
  for (int t = 0; t < 4; ++t) EXPECT_NEAR(adv[t], ret[t], 1e-15);
}

TEST(RolloutBuffer, ReturnsAreAdvantagesPlusValues) {
  RolloutBuffer<double> buf(3, 2, 1);
  for (int t = 0; t < 3; ++t) {
    buf.add(Eigen::VectorXd::Constant(2, t), Eigen::VectorXd::Constant(1, -t), 1.0, -0.5, 0.1 * t, false);
  }
  EXPECT_TRUE(buf.full());
  EXPECT_THROW(buf.add(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1), 0, 0, 0, false), InvalidSpec);
  buf.compute_advantages(0.0, 1.0, 1.0);
  EXPECT_NEAR(buf.returns[0], 3.0, 1e-12);
  EXPECT_NEAR(buf.returns[2], 1.0, 1e-12);
  EXPECT_NEAR(buf.advantages[1], 2.0 - 0.1, 1e-12);
}

TEST(ReplayBuffer, RingOverwritesOldestAndSamplesStoredRows) {
  ReplayBuffer<double> rb(4, 1, 1);
  for (int i = 0; i < 6; ++i) {
    rb.add(Eigen::VectorXd::Constant(1, i), Eigen::VectorXd::Constant(1, -i), i, Eigen::VectorXd::Constant(1, i + 1), i == 5);
  }
  EXPECT_EQ(rb.size(), 4);
  const auto b = rb.gather({0, 1, 2, 3});
  EXPECT_EQ(b.obs(0, 0), 4.0);  // slot 0 was overwritten by item 4
  EXPECT_EQ(b.obs(0, 1), 5.0);
  EXPECT_EQ(b.dones[1], 1.0);
  EXPECT_EQ(b.obs(0, 2), 2.0);
  std::mt19937_64 rng(1);
  const auto s = rb.sample(64, rng);
  for (int k = 0; k < 64; ++k) {
    EXPECT_GE(s.obs(0, k), 2.0);
    EXPECT_EQ(s.next_obs(0, k), s.obs(0, k) + 1.0);
    EXPECT_EQ(s.actions(0, k), -s.obs(0, k));
  }
}

TEST(PpoClip, ObjectiveExamples) {
  EXPECT_DOUBLE_EQ(ppo_clip_objective(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(ppo_clip_objective(0.5, -1.0, 0.2), -0.8);
  EXPECT_DOUBLE_EQ(ppo_clip_objective(1.1, 2.0, 0.2), 2.2);
  EXPECT_EQ(ppo_clip_objective_grad(1.5, 1.0, 0.2), 0.0);
  EXPECT_EQ(ppo_clip_objective_grad(0.5, 1.0, 0.2), 1.0);
  EXPECT_EQ(ppo_clip_objective_grad(0.5, -1.0, 0.2), 0.0);
}

TEST(Gradients, AllLossesMatchFiniteDifferencesOnSmallNets) {
  testing::GradSuiteOptions opt;
  opt.obs_dim = 7;
  opt.hidden = {12, 9};
  opt.act_dim = 3;
  opt.draws = 10;
  opt.seed = 42;
  for (const auto& r : testing::RunGradientSuite(opt)) {
    EXPECT_EQ(r.draws, 10);
    EXPECT_LT(r.max_rel_err, 1e-4) << r.name;
  }
}

TEST(Sac, ZeroDiscountTargetIsReward) {
  std::mt19937_64 rng(2);
  nn::GaussianPolicy<double> p(4, {8}, 2, nn::Activation::kTanh, -1.0);
  p.mean_net.init(nn::InitScheme::kUniformFanIn, 1);
  nn::Mlp<double> q1({6, 8, 1}), q2({6, 8, 1});
  q1.init(nn::InitScheme::kUniformFanIn, 2);
  q2.init(nn::InitScheme::kUniformFanIn, 3);
  const Eigen::MatrixXd next = Eigen::MatrixXd::Random(4, 5);
  const Eigen::VectorXd r = Eigen::VectorXd::Random(5);
  const Eigen::MatrixXd noise = Eigen::MatrixXd::Random(2, 5);
  const auto y = sac_targets<double>(p, q1, q2, next, r, Eigen::VectorXd::Zero(5), noise, 0.7, 0.0);
  for (int b = 0; b < 5; ++b) EXPECT_EQ(y[b], r[b]);

  // alpha = 0: the target is r + gamma min(Q1, Q2) at the sampled action.
  const auto y0 = sac_targets<double>(p, q1, q2, next, r, Eigen::VectorXd::Zero(5), noise, 0.0, 0.5);
  const auto s = squashed_sample(p, next, noise);
  const Eigen::MatrixXd x = critic_input<double>(next, s.action);
  for (int b = 0; b < 5; ++b) {
    const double qmin = std::min(q1.forward(x)(0, b), q2.forward(x)(0, b));
    EXPECT_NEAR(y0[b], r[b] + 0.5 * qmin, 1e-14);
  }
  // Terminal transitions do not bootstrap.
  const auto yd = sac_targets<double>(p, q1, q2, next, r, Eigen::VectorXd::Ones(5), noise, 0.7, 0.99);
  for (int b = 0; b < 5; ++b) EXPECT_EQ(yd[b], r[b]);
}

TEST(Sac, SquashedLogProbMatchesChangeOfVariables) {
  nn::GaussianPolicy<double> p(3, {5}, 2, nn::Activation::kTanh, -0.4);
  p.mean_net.init(nn::InitScheme::kUniformFanIn, 6);
  const Eigen::MatrixXd obs = Eigen::MatrixXd::Random(3, 4);
  const Eigen::MatrixXd noise = Eigen::MatrixXd::Random(2, 4);
  const auto s = squashed_sample(p, obs, noise);
  const Eigen::MatrixXd mean = p.mean_net.forward(obs);
  for (int b = 0; b < 4; ++b) {
    double lp = nn::gaussian_logprob_entropy<double>(mean.col(b), p.log_std, s.u.col(b)).log_prob;
    for (int i = 0; i < 2; ++i) lp -= std::log(1.0 - std::pow(std::tanh(s.u(i, b)), 2));
    EXPECT_NEAR(s.log_prob[b], lp, 1e-10);
  }
  EXPECT_NEAR(log_one_minus_tanh_sq(30.0), std::log(4.0) - 60.0, 1e-9);
}

TEST(LearningCurve, CsvAndThresholds) {
  LearningCurve c({"env_steps", "eval_mean_reward"});
  c.add({0, 0.3});
  c.add({100, 0.81});
  c.add({200, std::nan("")});
  EXPECT_EQ(c.first_reaching("eval_mean_reward", 0.8).value(), 100.0);
  EXPECT_FALSE(c.first_reaching("eval_mean_reward", 0.9).has_value());
  EXPECT_THROW(c.add({1.0}), DimensionError);
  std::ostringstream os;
  c.write_csv(os);
  EXPECT_EQ(os.str(), "env_steps,eval_mean_reward\n0,0.3\n100,0.81\n200,nan\n");
}

EnvSpec FullHandSpec(SynthKind kind) {
  EnvSpec spec;
  spec.topology = std::make_shared<const HandTopology>(build_default_hand());
  MotionSynthSpec ms;
  ms.kind = kind;
  spec.motion = std::make_shared<const ReferenceMotion>(synth_motion(ms, *spec.topology));
  return spec;
}

TEST(Evaluate, ZeroStepsIsZero) {
  EXPECT_EQ(retarget_baseline(FullHandSpec(SynthKind::kHold), 0).cumulative, 0.0);
}

TEST(Evaluate, HoldRetargetingNearCeiling) {
  const EvalResult r = retarget_baseline(FullHandSpec(SynthKind::kHold), 2000);
  EXPECT_GE(r.cumulative, 1950.0);
  EXPECT_LE(r.cumulative, 2000.0);
}

TEST(Evaluate, ConstantOraclePolicyOnHold) {
  PolicySnapshot oracle;
  oracle.algo = "ppo";
  oracle.policy = nn::GaussianPolicy<double>(46, {4}, 15, nn::Activation::kTanh, -2.0);
  oracle.normalizer = nn::RunningNormalizer(46);
  oracle.normalizer.set_enabled(false);
  const EvalResult r = evaluate(oracle, FullHandSpec(SynthKind::kHold), 2000);
  EXPECT_GE(r.cumulative, 1950.0);
  EXPECT_LE(r.cumulative, 2000.0);
}

TEST(Evaluate, ZeroGainsTrackWorseThanTunedGains) {
  EnvSpec tuned = FullHandSpec(SynthKind::kSinusoid);
  EnvSpec zero = tuned;
  zero.gains = {0.0, 0.0};
  EXPECT_LT(retarget_baseline(zero, 300).cumulative, retarget_baseline(tuned, 300).cumulative);
}

TEST(Evaluate, RandomPolicyStaysBelowCeiling) {
  const EvalResult r = random_baseline(FullHandSpec(SynthKind::kSinusoid), 500, 3);
  EXPECT_GT(r.cumulative, 0.0);
  EXPECT_LT(r.cumulative, 500.0);
  EXPECT_EQ(r.cumulative, random_baseline(FullHandSpec(SynthKind::kSinusoid), 500, 3).cumulative);
}

TEST(Evaluate, SummaryUsesSampleStd) {
  const SeedSummary s = summarize({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
  const std::string md = render_comparison_markdown(published_letter_results());
  EXPECT_NE(md.find("| A | 1905 | 1700 ± 106 | 1661 ± 62 |"), std::string::npos);
}

EnvSpec TinySpec() {
  EnvSpec spec;
  spec.topology = std::make_shared<const HandTopology>(build_reduced_hand());
  spec.motion = std::make_shared<const ReferenceMotion>(synth_motion(MotionSynthSpec{}, *spec.topology));
  spec.episode.episode_steps = 50;
  return spec;
}

PpoConfig TinyPpo() {
  PpoConfig c = PpoConfig::table_a1_best();
  c.hidden = {16, 16};
  c.n_steps = 64;
  c.batch_size = 32;
  c.n_epochs = 2;
  c.total_steps = 128;
  c.eval_interval = 64;
  c.eval_steps = 50;
  return c;
}

SacConfig TinySac() {
  SacConfig c;
  c.hidden = {16, 16};
  c.batch_size = 16;
  c.learning_starts = 20;
  c.total_steps = 60;
  c.eval_interval = 30;
  c.eval_steps = 50;
  return c;
}

TEST(Train, ZeroStepsEmitsOnlyInitialEvaluation) {
  PpoConfig p = TinyPpo();
  p.total_steps = 0;
  const TrainOutput a = train_ppo(TinySpec(), p);
  ASSERT_EQ(a.curve.size(), 1u);
  EXPECT_EQ(a.curve.rows()[0][0], 0.0);
  SacConfig s = TinySac();
  s.total_steps = 0;
  EXPECT_EQ(train_sac(TinySpec(), s).curve.size(), 1u);
}

std::string Csv(const LearningCurve& c) {
  std::ostringstream os;
  c.write_csv(os);
  return os.str();
}

TEST(Train, PpoIsDeterministicAndChangesParameters) {
  const TrainOutput a = train_ppo(TinySpec(), TinyPpo(), "", Precision::kFloat64);
  const TrainOutput b = train_ppo(TinySpec(), TinyPpo(), "", Precision::kFloat64);
  EXPECT_EQ(Csv(a.curve), Csv(b.curve));
  EXPECT_EQ(a.checkpoint.dump(), b.checkpoint.dump());
  EXPECT_EQ(a.curve.size(), 3u);

  PpoConfig untrained = TinyPpo();
  untrained.total_steps = 0;
  const TrainOutput c = train_ppo(TinySpec(), untrained, "", Precision::kFloat64);
  EXPECT_NE(a.checkpoint["policy"].dump(), c.checkpoint["policy"].dump());
}

TEST(Train, SacIsDeterministic) {
  const TrainOutput a = train_sac(TinySpec(), TinySac(), "", Precision::kFloat64);
  const TrainOutput b = train_sac(TinySpec(), TinySac(), "", Precision::kFloat64);
  EXPECT_EQ(Csv(a.curve), Csv(b.curve));
  EXPECT_EQ(a.checkpoint.dump(), b.checkpoint.dump());
}

TEST(Train, CheckpointRestoresTheEvaluatedPolicy) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "handmimic_train_ckpt";
  fs::create_directories(dir);
  const TrainOutput out = train_sac(TinySpec(), TinySac(), dir.string());
  ASSERT_TRUE(fs::exists(dir / "curve.csv"));
  const PolicySnapshot back = load_checkpoint((dir / "checkpoint.json").string());
  EXPECT_TRUE(back.squash);
  EXPECT_EQ(evaluate(back, TinySpec(), 50).cumulative, evaluate(out.policy, TinySpec(), 50).cumulative);
  fs::remove_all(dir);
  EXPECT_THROW(load_checkpoint((dir / "checkpoint.json").string()), ParseError);
}

TEST(Train, InvalidConfigRejected) {
  PpoConfig p = TinyPpo();
  p.batch_size = 1000;
  EXPECT_THROW(train_ppo(TinySpec(), p), InvalidSpec);
  SacConfig s = TinySac();
  s.tau = 0.0;
  EXPECT_THROW(train_sac(TinySpec(), s), InvalidSpec);
}

TEST(SweepGrid, DecodeCoversEveryPointOnce) {
  const SweepGrid grid;
  EXPECT_EQ(grid.size(), 4 * 3 * 2 * 3 * 2 * 3 * 3);
  std::set<std::array<int, 7>> seen;
  for (long i = 0; i < grid.size(); ++i) seen.insert(grid.decode(i));
  EXPECT_EQ(static_cast<long>(seen.size()), grid.size());
  const PpoConfig c = grid.apply(PpoConfig{}, grid.decode(grid.size() - 1));
  EXPECT_EQ(c.learning_rate, 3e-5);
  EXPECT_EQ(c.n_steps, 4096);
  EXPECT_EQ(c.n_epochs, 10);
  EXPECT_EQ(grid.embed(grid.decode(0)).sum(), 7.0);
}

// Additive score peaking at one known grid point.
double SyntheticScore(const PpoConfig& c) {
  return -std::abs(std::log10(c.learning_rate) + 5.0) - std::abs(c.n_steps - 1024) / 512.0 -
         (c.batch_size == 128 ? 0.0 : 1.0) - (c.gamma == 0.9 ? 0.0 : 1.0) - std::abs(c.log_std_init + 2.0) -
         std::abs(c.n_epochs - 10) / 5.0 - (c.weight_decay == 1e-5 ? 0.0 : 1.0);
}

TEST(Sweep, ExhaustiveAndRandomModes) {
  const SweepGrid grid;
  SweepOptions opt;
  opt.mode = SweepMode::kExhaustive;
  opt.budget = 5;
  const auto ex = run_sweep(grid, PpoConfig{}, SyntheticScore, opt);
  ASSERT_EQ(ex.size(), 5u);
  EXPECT_EQ(ex[1].n_epochs, grid.n_epochs[1]);
  opt.mode = SweepMode::kRandom;
  opt.budget = 20;
  const auto a = run_sweep(grid, PpoConfig{}, SyntheticScore, opt);
  const auto b = run_sweep(grid, PpoConfig{}, SyntheticScore, opt);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(analysis::record_values(a[i]), analysis::record_values(b[i]));
  EXPECT_THROW(sweep_mode_from_string("grid"), InvalidSpec);
}

TEST(Sweep, BayesianSearchFindsSeparableOptimum) {
  SweepOptions opt;
  opt.budget = 40;
  const auto rec = run_sweep(SweepGrid{}, PpoConfig{}, SyntheticScore, opt);
  ASSERT_EQ(rec.size(), 40u);
  std::set<std::array<double, 9>> distinct;
  double best = -1e300;
  for (const auto& r : rec) {
    distinct.insert(analysis::record_values(r));
    best = std::max(best, r.mean_reward);
  }
  EXPECT_EQ(distinct.size(), rec.size());
  EXPECT_EQ(best, 0.0);
}

TEST(Sweep, TrialTrainsAndEvaluates) {
  PpoConfig c = TinyPpo();
  const double r = make_ppo_trial(TinySpec(), 100, Precision::kFloat64)(c);
  EXPECT_GT(r, 0.0);
  EXPECT_LE(r, 100.0);
}

}  // namespace
}  // namespace handmimic::rl
