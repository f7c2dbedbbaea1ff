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

#ifndef HANDMIMIC_BAYESOPT_HPP_
#define HANDMIMIC_BAYESOPT_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "handmimic/analysis.hpp"
#include "handmimic/dynamics.hpp"
#include "handmimic/env.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/motion.hpp"
#include "handmimic/reward.hpp"

namespace handmimic::bayesopt {

inline constexpr double kDivergencePenalty = 1e9;

// Sum over the reference's duration of pose error + velocity error while
// retargeting it with `gains`. Starts at rest on frame 0. Non-finite runs
// score kDivergencePenalty.
inline double control_objective(const PdGains& gains, const EnvSpec& spec) {
  const HandTopology& topo = *spec.topology;
  const ReferenceMotion& motion = *spec.motion;
  const int steps = static_cast<int>(std::lround(motion.duration() * spec.sim.control_hz));
  HandState state = HandState::at_rest(clamp_to_limits(topo, motion.frame(0)));
  JointVector previous = state.q;
  double total = 0.0;
  try {
    for (int k = 0; k < steps; ++k) {
      const JointVector target = clamp_to_limits(topo, sample(motion, state.t + spec.sim.control_dt()).q);
      JointVector tv = JointVector::Zero(target.size());
      if (spec.episode.velocity_target == VelocityTarget::kCommandedRate) {
        tv = (target - previous) * static_cast<double>(spec.sim.control_hz);
      }
      state = step(state, target, tv, gains, spec.sim, topo);
      previous = target;
      const MotionSample ref = sample(motion, state.t);
      total += pose_error(joint_orientations(topo, state.q), joint_orientations(topo, ref.q)) +
               velocity_error(state.qdot, ref.qdot);
    }
  } catch (const NonFiniteState&) {
    return kDivergencePenalty;
  }
  return std::isfinite(total) ? std::min(total, kDivergencePenalty) : kDivergencePenalty;
}

// ---------- Gaussian process ----------

struct KernelParams {
  std::array<double, 2> length_scale{0.2, 0.2};
  double signal_variance = 1.0;
  double noise = 1e-6;  // added to the diagonal
};

// Squared-exponential ARD kernel on 2D inputs.
inline double se_kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const KernelParams& p) {
  const double d0 = (a[0] - b[0]) / p.length_scale[0];
  const double d1 = (a[1] - b[1]) / p.length_scale[1];
  return p.signal_variance * std::exp(-0.5 * (d0 * d0 + d1 * d1));
}

struct GpModel {
  std::vector<Eigen::Vector2d> x;
  Eigen::VectorXd y;
  KernelParams kernel;
  double prior_mean = 0.0;
  double jitter = 0.0;  // extra diagonal actually used
  Eigen::LLT<Eigen::MatrixXd> chol;
  Eigen::VectorXd alpha;  // K^-1 (y - prior_mean)

  int size() const { return static_cast<int>(x.size()); }
};

// Exact GP regression. Jitter is escalated from 0 up to 1e-4 * signal
// variance; SingularKernel if the kernel is still not positive definite.
inline GpModel gp_fit(const std::vector<Eigen::Vector2d>& x, const Eigen::VectorXd& y,
                      const KernelParams& kernel, double prior_mean = 0.0) {
  if (static_cast<Eigen::Index>(x.size()) != y.size()) throw DimensionError("gp_fit: X and y differ in length");
  if (!y.allFinite()) throw InvalidSpec("gp_fit: non-finite targets");
  GpModel m;
  m.x = x;
  m.y = y;
  m.kernel = kernel;
  m.prior_mean = prior_mean;
  const int n = static_cast<int>(x.size());
  if (n == 0) return m;
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = se_kernel(x[i], x[j], kernel);
  k.diagonal().array() += kernel.noise;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    m.chol.compute(kj);
    if (m.chol.info() == Eigen::Success) {
      m.jitter = jitter;
      m.alpha = m.chol.solve((y.array() - prior_mean).matrix());
      return m;
    }
    jitter = jitter == 0.0 ? 1e-10 * kernel.signal_variance : jitter * 10.0;
  }
  throw SingularKernel("gp_fit: kernel matrix not positive definite after jitter");
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline Prediction gp_predict(const GpModel& m, const Eigen::Vector2d& x) {
  if (m.size() == 0) return {m.prior_mean, m.kernel.signal_variance};
  Eigen::VectorXd ks(m.size());
  for (int i = 0; i < m.size(); ++i) ks[i] = se_kernel(x, m.x[i], m.kernel);
  Prediction p;
  p.mean = m.prior_mean + ks.dot(m.alpha);
  const Eigen::VectorXd v = m.chol.matrixL().solve(ks);
  p.variance = std::max(m.kernel.signal_variance - v.squaredNorm(), 0.0);
  return p;
}

inline double log_marginal_likelihood(const std::vector<Eigen::Vector2d>& x, const Eigen::VectorXd& y,
                                      const KernelParams& kernel) {
  const GpModel m = gp_fit(x, y, kernel);
  const Eigen::MatrixXd l = m.chol.matrixL();
  return -0.5 * y.dot(m.alpha) - l.diagonal().array().log().sum() -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

// ---------- optimization helpers ----------

// Derivative-free minimization on the box [lo, hi]^d (points are clamped).
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd start, double step, double lo, double hi,
                                   int max_iter = 200, double tol = 1e-8) {
  const int d = static_cast<int>(start.size());
  auto clampv = [&](Eigen::VectorXd v) { return Eigen::VectorXd(v.cwiseMax(lo).cwiseMin(hi)); };
  std::vector<Eigen::VectorXd> s(d + 1, clampv(start));
  for (int i = 0; i < d; ++i) {
    s[i + 1][i] += (s[i + 1][i] + step <= hi) ? step : -step;
    s[i + 1] = clampv(s[i + 1]);
  }
  std::vector<double> fs(d + 1);
  for (int i = 0; i <= d; ++i) fs[i] = f(s[i]);
  std::vector<int> order(d + 1);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i <= d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order.front();
    const int worst = order.back();
    const int second = order[d - 1];
    if (std::abs(fs[worst] - fs[best]) < tol) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i)
      if (i != worst) centroid += s[i];
    centroid /= d;
    const Eigen::VectorXd xr = clampv(centroid + (centroid - s[worst]));
    const double fr = f(xr);
    if (fr < fs[best]) {
      const Eigen::VectorXd xe = clampv(centroid + 2.0 * (centroid - s[worst]));
      const double fe = f(xe);
      if (fe < fr) {
        s[worst] = xe;
        fs[worst] = fe;
      } else {
        s[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second]) {
      s[worst] = xr;
      fs[worst] = fr;
    } else {
      const Eigen::VectorXd xc = clampv(centroid + 0.5 * (s[worst] - centroid));
      const double fc = f(xc);
      if (fc < fs[worst]) {
        s[worst] = xc;
        fs[worst] = fc;
      } else {
        for (int i = 0; i <= d; ++i) {
          if (i == best) continue;
          s[i] = clampv(s[best] + 0.5 * (s[i] - s[best]));
          fs[i] = f(s[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= d; ++i)
    if (fs[i] < fs[best]) best = i;
  return s[best];
}

inline double standard_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Expected improvement below best_y for a Gaussian prediction.
inline double expected_improvement(double mean, double variance, double best_y) {
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double gain = best_y - mean;
  if (sigma < 1e-12) return std::max(gain, 0.0);
  const double z = gain / sigma;
  return std::max(gain * standard_normal_cdf(z) + sigma * standard_normal_pdf(z), 0.0);
}

inline double expected_improvement(const GpModel& m, const Eigen::Vector2d& x, double best_y) {
  const Prediction p = gp_predict(m, x);
  return expected_improvement(p.mean, p.variance, best_y);
}

// Radical inverse in `base`.
inline double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

// Marginal-likelihood fit of length scales, signal variance and noise on
// inputs in [0,1]^2; falls back to the default parameters if every start
// fails.
inline KernelParams fit_kernel(const std::vector<Eigen::Vector2d>& x, const Eigen::VectorXd& y,
                               std::mt19937_64& rng) {
  KernelParams fallback;
  if (x.size() < 3) return fallback;
  // theta = log(l0), log(l1), log(s2), log(noise)
  auto unpack = [](const Eigen::VectorXd& t) {
    KernelParams p;
    p.length_scale = {std::exp(t[0]), std::exp(t[1])};
    p.signal_variance = std::exp(t[2]);
    p.noise = std::exp(t[3]);
    return p;
  };
  const double lo_l = std::log(0.02), hi_l = std::log(5.0);
  const double lo_s = std::log(0.05), hi_s = std::log(20.0);
  const double lo_n = std::log(1e-6), hi_n = std::log(1e-1);
  auto to_unit = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd t(4);
    t[0] = lo_l + u[0] * (hi_l - lo_l);
    t[1] = lo_l + u[1] * (hi_l - lo_l);
    t[2] = lo_s + u[2] * (hi_s - lo_s);
    t[3] = lo_n + u[3] * (hi_n - lo_n);
    return t;
  };
  auto objective = [&](const Eigen::VectorXd& u) {
    try {
      const double lml = log_marginal_likelihood(x, y, unpack(to_unit(u)));
      return std::isfinite(lml) ? -lml : 1e30;
    } catch (const SingularKernel&) {
      return 1e30;
    }
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  for (int start = 0; start < 4; ++start) {
    Eigen::VectorXd u(4);
    if (start == 0) {
      u << 0.45, 0.45, 0.5, 0.2;
    } else {
      for (int i = 0; i < 4; ++i) u[i] = unit(rng);
    }
    const Eigen::VectorXd r = nelder_mead(objective, u, 0.15, 0.0, 1.0, 150);
    const double f = objective(r);
    if (f < best_f) {
      best_f = f;
      best_u = r;
    }
  }
  if (!(best_f < 1e29)) return fallback;
  return unpack(to_unit(best_u));
}

// ---------- tuning loop ----------

struct TraceRow {
  int iteration = 0;
  double kp = 0.0;
  double kd = 0.0;
  double epsilon = 0.0;
  double incumbent = 0.0;
};

struct TuneResult {
  double bound = 1.0;
  PdGains best;
  double best_epsilon = 0.0;
  std::vector<TraceRow> trace;
  std::optional<double> pcc_kp;  // PCC(kp, epsilon) over the trace
  std::optional<double> pcc_kd;

  void write_trace_csv(std::ostream& os) const {
    os << "iteration,kp,kd,epsilon,incumbent\n";
    char buf[160];
    for (const auto& r : trace) {
      std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g\n", r.iteration, r.kp, r.kd, r.epsilon,
                    r.incumbent);
      os << buf;
    }
  }
};

struct TuneOptions {
  double bound = 1.0;  // kp, kd in [0, bound]
  int budget = 60;
  int initial_points = 5;
  int candidates = 2000;
  // The search runs in u in [0,1]^2 with gain = bound * w * ((1 + 1/w)^u - 1),
  // which spreads small gains over more of the space. 0 means linear.
  double warp = 0.01;
  std::uint64_t seed = 0;

  double gain(double u) const {
    if (warp <= 0.0) return bound * u;
    return std::min(bound, bound * warp * (std::pow(1.0 + 1.0 / warp, u) - 1.0));
  }
};

using Objective = std::function<double(const PdGains&)>;

// GP + expected-improvement search over [0, bound]^2, in the warped
// coordinates of TuneOptions. Objective values are modelled as standardized
// log(epsilon).
inline TuneResult tune_controller(const Objective& objective, const TuneOptions& opt) {
  if (!(opt.bound > 0.0)) throw InvalidSpec("tune_controller: bound must be > 0");
  if (!(opt.warp >= 0.0)) throw InvalidSpec("tune_controller: warp must be >= 0");
  if (opt.budget < opt.initial_points || opt.initial_points < 1) {
    throw InvalidSpec("tune_controller: budget must be >= the number of initial points");
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double shift0 = unit(rng);
  const double shift1 = unit(rng);

  TuneResult result;
  result.bound = opt.bound;
  std::vector<Eigen::Vector2d> xs;
  std::vector<double> eps;
  auto evaluate = [&](const Eigen::Vector2d& u) {
    PdGains g{opt.gain(u[0]), opt.gain(u[1])};
    const double e = objective(g);
    xs.push_back(u);
    eps.push_back(e);
    TraceRow row{static_cast<int>(eps.size()) - 1, g.kp, g.kd, e, e};
    if (!result.trace.empty()) row.incumbent = std::min(e, result.trace.back().incumbent);
    result.trace.push_back(row);
  };

  for (int i = 1; i <= opt.initial_points; ++i) {
    evaluate(Eigen::Vector2d(std::fmod(halton(i, 2) + shift0, 1.0), std::fmod(halton(i, 3) + shift1, 1.0)));
  }

  while (static_cast<int>(eps.size()) < opt.budget) {
    const int n = static_cast<int>(eps.size());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = std::log(eps[i] + 1e-12);
    const double mean = y.mean();
    const double sd = std::sqrt((y.array() - mean).square().sum() / std::max(n - 1, 1));
    y = ((y.array() - mean) / (sd > 1e-12 ? sd : 1.0)).matrix();
    const KernelParams kp = fit_kernel(xs, y, rng);
    GpModel model;
    try {
      model = gp_fit(xs, y, kp);
    } catch (const SingularKernel&) {
      model = gp_fit(xs, y, KernelParams{});
    }
    const double best_y = y.minCoeff();

    // Random candidates, then local refinement of the best few.
    std::vector<std::pair<double, Eigen::Vector2d>> cands;
    cands.reserve(opt.candidates);
    for (int c = 0; c < opt.candidates; ++c) {
      Eigen::Vector2d u(unit(rng), unit(rng));
      cands.emplace_back(expected_improvement(model, u, best_y), u);
    }
    const Eigen::Vector2d corners[4] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (const auto& u : corners) cands.emplace_back(expected_improvement(model, u, best_y), u);
    std::partial_sort(cands.begin(), cands.begin() + 5, cands.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best_ei = -1.0;
    Eigen::Vector2d next = cands.front().second;
    for (int s = 0; s < 5; ++s) {
      const Eigen::VectorXd r = nelder_mead(
          [&](const Eigen::VectorXd& v) { return -expected_improvement(model, Eigen::Vector2d(v[0], v[1]), best_y); },
          cands[s].second, 0.05, 0.0, 1.0, 100, 1e-12);
      const double ei = expected_improvement(model, Eigen::Vector2d(r[0], r[1]), best_y);
      if (ei > best_ei) {
        best_ei = ei;
        next = Eigen::Vector2d(r[0], r[1]);
      }
    }
    bool duplicate = false;
    for (const auto& x : xs) duplicate = duplicate || (x - next).norm() < 1e-6;
    if (duplicate || !(best_ei > 0.0)) next = Eigen::Vector2d(unit(rng), unit(rng));
    evaluate(next);
  }

  const auto it = std::min_element(eps.begin(), eps.end());
  const std::size_t bi = static_cast<std::size_t>(it - eps.begin());
  result.best = PdGains{result.trace[bi].kp, result.trace[bi].kd};
  result.best_epsilon = *it;
  std::vector<double> kps, kds;
  for (const auto& r : result.trace) {
    kps.push_back(r.kp);
    kds.push_back(r.kd);
  }
  try {
    result.pcc_kp = analysis::pearson(kps, eps);
  } catch (const DegenerateInput&) {
  }
  try {
    result.pcc_kd = analysis::pearson(kds, eps);
  } catch (const DegenerateInput&) {
  }
  return result;
}

struct GridResult {
  PdGains best;
  double best_epsilon = std::numeric_limits<double>::infinity();
};

// Exhaustive search on an n x n grid over [0, bound]^2.
inline GridResult grid_search(const Objective& objective, double bound, int n = 101) {
  GridResult g;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const PdGains gains{bound * i / (n - 1), bound * j / (n - 1)};
      const double e = objective(gains);
      if (e < g.best_epsilon) {
        g.best_epsilon = e;
        g.best = gains;
      }
    }
  }
  return g;
}

// Published incumbent and per-bound (kp, kd) correlations with the error,
// shipped as reference values only.
struct PublishedSweep {
  double bound;
  double pcc_kp;
  double pcc_kd;
};
inline constexpr PdGains kPublishedBestGains{0.22, 0.87};
inline constexpr std::array<PublishedSweep, 3> kPublishedSweeps{
    {{100.0, -0.44, 0.45}, {10.0, 0.71, 0.71}, {1.0, 0.51, -0.49}}};

}  // namespace handmimic::bayesopt

#endif  // HANDMIMIC_BAYESOPT_HPP_
