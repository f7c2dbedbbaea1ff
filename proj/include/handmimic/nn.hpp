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

#ifndef HANDMIMIC_NN_HPP_
#define HANDMIMIC_NN_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "handmimic/errors.hpp"

namespace handmimic::nn {

enum class Activation { kTanh, kRelu, kLinear };
enum class InitScheme { kOrthogonal, kUniformFanIn };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    default: return "linear";
  }
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw ConfigError("unknown activation '" + s + "'");
}

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Dense multilayer perceptron. Hidden layers use `activation`, the output
// layer is affine. All weights and biases live in one flat vector so that
// optimizers, Polyak averaging and checkpoints treat them uniformly.
//
// Inputs are column-major batches: x is (input_dim x batch).
template <typename Scalar>
class Mlp {
 public:
  using Vec = Vector<Scalar>;
  using Mat = Matrix<Scalar>;

  // Intermediate values recorded by forward() for backward().
  struct Tape {
    std::vector<Mat> inputs;  // input to each layer
    std::vector<Mat> pre;     // pre-activation of each layer
  };

  Mlp() = default;

  // sizes = {input, hidden..., output}
  explicit Mlp(std::vector<int> sizes, Activation activation = Activation::kTanh)
      : sizes_(std::move(sizes)), activation_(activation) {
    if (sizes_.size() < 2) throw ShapeError("Mlp needs at least input and output sizes");
    int offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) throw ShapeError("Mlp layer sizes must be positive");
      offsets_.push_back(offset);
      offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_ = Vec::Zero(offset);
  }

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int num_params() const { return static_cast<int>(params_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  Eigen::Map<Mat> weight(int l) {
    return Eigen::Map<Mat>(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<const Mat> weight(int l) const {
    return Eigen::Map<const Mat>(params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
  }
  Eigen::Map<Vec> bias(int l) {
    return Eigen::Map<Vec>(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
  }
  Eigen::Map<const Vec> bias(int l) const {
    return Eigen::Map<const Vec>(params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l],
                                 sizes_[l + 1]);
  }

  Mat forward(const Mat& x) const {
    CheckInput(x);
    Mat h = x;
    for (int l = 0; l < num_layers(); ++l) {
      Mat z = Affine(l, h);
      h = l + 1 < num_layers() ? Activate(z) : std::move(z);
    }
    return h;
  }

  Mat forward(const Mat& x, Tape& tape) const {
    CheckInput(x);
    tape.inputs.assign(num_layers(), Mat());
    tape.pre.assign(num_layers(), Mat());
    Mat h = x;
    for (int l = 0; l < num_layers(); ++l) {
      tape.inputs[l] = h;
      tape.pre[l] = Affine(l, h);
      h = l + 1 < num_layers() ? Activate(tape.pre[l]) : tape.pre[l];
    }
    return h;
  }

  // Given dL/dy, accumulates dL/dparams into `grad` and returns dL/dx.
  Mat backward(const Tape& tape, const Mat& dy, Vec& grad) const {
    if (grad.size() != num_params()) grad = Vec::Zero(num_params());
    Mat delta = dy;
    for (int l = num_layers() - 1; l >= 0; --l) {
      if (l + 1 < num_layers()) {
        if (activation_ == Activation::kTanh) {
          delta.array() *= Scalar(1) - tape.inputs[l + 1].array().square();
        } else {
          delta = delta.cwiseProduct(ActivationDerivative(tape.pre[l]));
        }
      }
      Eigen::Map<Mat> gw(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]);
      Eigen::Map<Vec> gb(grad.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
      gw.noalias() += delta * tape.inputs[l].transpose();
      gb += delta.rowwise().sum();
      delta = weight(l).transpose() * delta;
    }
    return delta;
  }

  // Orthogonal: each weight matrix has orthonormal rows or columns scaled by
  // the gain (hidden_gain for hidden layers, output_gain for the last one),
  // biases zero. Uniform fan-in: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
  // weights and biases.
  void init(InitScheme scheme, std::uint64_t seed, double hidden_gain = std::numbers::sqrt2,
            double output_gain = 1.0) {
    std::mt19937_64 rng(seed);
    for (int l = 0; l < num_layers(); ++l) {
      const int rows = sizes_[l + 1];
      const int cols = sizes_[l];
      if (scheme == InitScheme::kOrthogonal) {
        const double gain = l + 1 < num_layers() ? hidden_gain : output_gain;
        weight(l) = (gain * OrthogonalMatrix(rows, cols, rng)).template cast<Scalar>();
        bias(l).setZero();
      } else {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (int c = 0; c < cols; ++c)
          for (int r = 0; r < rows; ++r) weight(l)(r, c) = static_cast<Scalar>(u(rng));
        for (int r = 0; r < rows; ++r) bias(l)(r) = static_cast<Scalar>(u(rng));
      }
    }
  }

  nlohmann::json to_json() const {
    std::vector<double> p(params_.size());
    for (Eigen::Index i = 0; i < params_.size(); ++i) p[i] = static_cast<double>(params_[i]);
    return {{"sizes", sizes_}, {"activation", to_string(activation_)}, {"params", p}};
  }

  static Mlp from_json(const nlohmann::json& j) {
    Mlp m(j.at("sizes").get<std::vector<int>>(), activation_from_string(j.at("activation")));
    const auto p = j.at("params").get<std::vector<double>>();
    if (static_cast<int>(p.size()) != m.num_params()) throw ParseError("Mlp params size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) m.params_[i] = static_cast<Scalar>(p[i]);
    return m;
  }

 private:
  void CheckInput(const Mat& x) const {
    if (x.rows() != input_dim()) {
      throw ShapeError("Mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(input_dim()));
    }
  }

  // Eigen only vectorizes tanh for float. For double, 1 - 2/(exp(2|x|)+1)
  // with the sign restored is vectorized and within 2.3e-16 of std::tanh.
  // exp overflow gives exactly +-1; NaN stays NaN.
  static Mat Tanh(const Mat& z) {
    if constexpr (std::is_same_v<Scalar, double>) {
      const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> y =
          Scalar(1) - Scalar(2) / ((Scalar(2) * z.array().abs()).exp() + Scalar(1));
      return (z.array() < Scalar(0)).select(-y, y).matrix();
    } else {
      return z.array().tanh().matrix();
    }
  }

  // W h + b. Tiny batches use one matrix-vector product per column, which
  // skips GEMM panel packing.
  Mat Affine(int l, const Mat& h) const {
    Mat z(sizes_[l + 1], h.cols());
    if (h.cols() <= 8) {
      for (Eigen::Index j = 0; j < h.cols(); ++j) z.col(j).noalias() = weight(l) * h.col(j);
    } else {
      z.noalias() = weight(l) * h;
    }
    z.colwise() += bias(l);
    return z;
  }

  Mat Activate(const Mat& z) const {
    switch (activation_) {
      case Activation::kTanh: return Tanh(z);
      case Activation::kRelu: return z.cwiseMax(Scalar(0));
      default: return z;
    }
  }

  Mat ActivationDerivative(const Mat& z) const {
    switch (activation_) {
      case Activation::kTanh: return (Scalar(1) - Tanh(z).array().square()).matrix();
      case Activation::kRelu: return (z.array() > Scalar(0)).template cast<Scalar>().matrix();
      default: return Mat::Ones(z.rows(), z.cols());
    }
  }

  static Eigen::MatrixXd OrthogonalMatrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd a(big, small);
    for (int c = 0; c < small; ++c)
      for (int r = 0; r < big; ++r) a(r, c) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
    for (int c = 0; c < small; ++c) {
      if (r(c, c) < 0.0) q.col(c) *= -1.0;
    }
    return rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  }

  std::vector<int> sizes_;
  std::vector<int> offsets_;
  Activation activation_ = Activation::kTanh;
  Vec params_;
};

// ---------- diagonal Gaussian ----------

struct LogProbEntropy {
  double log_prob;
  double entropy;
};

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

// Diagonal Gaussian log density at `action` and entropy sum_i (0.5 ln(2 pi e) + log_std_i).
template <typename Scalar>
LogProbEntropy gaussian_logprob_entropy(const Vector<Scalar>& mean, const Vector<Scalar>& log_std,
                                        const Vector<Scalar>& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ShapeError("gaussian_logprob_entropy: size mismatch");
  }
  double lp = 0.0;
  double h = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double ls = static_cast<double>(log_std[i]);
    const double z = (static_cast<double>(action[i]) - static_cast<double>(mean[i])) * std::exp(-ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
    h += 0.5 + kHalfLog2Pi + ls;
  }
  return {lp, h};
}

// Policy with a state-independent log standard deviation.
template <typename Scalar>
struct GaussianPolicy {
  Mlp<Scalar> mean_net;
  Vector<Scalar> log_std;

  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, std::vector<int> hidden, int action_dim, Activation act,
                 double log_std_init)
      : mean_net(Sizes(obs_dim, std::move(hidden), action_dim), act),
        log_std(Vector<Scalar>::Constant(action_dim, static_cast<Scalar>(log_std_init))) {}

  int obs_dim() const { return mean_net.input_dim(); }
  int action_dim() const { return mean_net.output_dim(); }

  double entropy() const {
    double h = 0.0;
    for (Eigen::Index i = 0; i < log_std.size(); ++i) h += 0.5 + kHalfLog2Pi + static_cast<double>(log_std[i]);
    return h;
  }

  nlohmann::json to_json() const {
    std::vector<double> ls(log_std.size());
    for (Eigen::Index i = 0; i < log_std.size(); ++i) ls[i] = static_cast<double>(log_std[i]);
    return {{"mean_net", mean_net.to_json()}, {"log_std", ls}};
  }

  static GaussianPolicy from_json(const nlohmann::json& j) {
    GaussianPolicy p;
    p.mean_net = Mlp<Scalar>::from_json(j.at("mean_net"));
    const auto ls = j.at("log_std").get<std::vector<double>>();
    p.log_std.resize(static_cast<Eigen::Index>(ls.size()));
    for (std::size_t i = 0; i < ls.size(); ++i) p.log_std[i] = static_cast<Scalar>(ls[i]);
    return p;
  }

  static std::vector<int> Sizes(int in, std::vector<int> hidden, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
  }
};

// ---------- optimization ----------

// Adam with decoupled weight decay (AdamW when weight_decay > 0).
template <typename Scalar>
class Adam {
 public:
  Adam() = default;
  Adam(int n, double lr, double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(Vector<Scalar>::Zero(n)), v_(Vector<Scalar>::Zero(n)) {}

  void step(Eigen::Ref<Vector<Scalar>> params, const Vector<Scalar>& grad) {
    if (grad.size() != params.size() || grad.size() != m_.size()) throw ShapeError("Adam: size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    if (weight_decay_ > 0.0) params *= static_cast<Scalar>(1.0 - lr_ * weight_decay_);
    m_ = static_cast<Scalar>(beta1_) * m_ + static_cast<Scalar>(1.0 - beta1_) * grad;
    v_ = static_cast<Scalar>(beta2_) * v_ + static_cast<Scalar>(1.0 - beta2_) * grad.cwiseAbs2();
    const Scalar step_size = static_cast<Scalar>(lr_ / bc1);
    const Scalar root_bc2 = static_cast<Scalar>(std::sqrt(bc2));
    params.array() -= step_size * m_.array() / (v_.array().sqrt() / root_bc2 + static_cast<Scalar>(eps_));
  }

  double learning_rate() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_ = 1e-3;
  double weight_decay_ = 0.0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Vector<Scalar> m_;
  Vector<Scalar> v_;
};

// Scales every gradient by min(1, max_norm / global_norm); returns the norm.
template <typename Scalar>
double clip_grad_norm(std::vector<Vector<Scalar>*> grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads) sq += static_cast<double>(g->squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const Scalar scale = static_cast<Scalar>(max_norm / (norm + 1e-6));
    for (auto* g : grads) *g *= scale;
  }
  return norm;
}

// theta_target <- (1 - tau) theta_target + tau theta
template <typename Scalar>
void polyak_update(Vector<Scalar>& target, const Vector<Scalar>& online, double tau) {
  if (tau >= 1.0) {
    target = online;
    return;
  }
  target = static_cast<Scalar>(1.0 - tau) * target + static_cast<Scalar>(tau) * online;
}

// ---------- observation normalization ----------

// Running mean/variance (parallel Welford merge). Frozen normalizers ignore
// update() so evaluation sees fixed statistics.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 10.0)
      : mean_(Eigen::VectorXd::Zero(dim)), var_(Eigen::VectorXd::Ones(dim)), clip_(clip) {}

  int dim() const { return static_cast<int>(mean_.size()); }
  bool frozen() const { return frozen_; }
  void set_frozen(bool f) { frozen_ = f; }
  bool enabled() const { return enabled_; }
  void set_enabled(bool e) { enabled_ = e; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }
  double count() const { return count_; }

  // batch: dim x n
  void update(const Eigen::MatrixXd& batch) {
    if (frozen_ || !enabled_ || batch.cols() == 0) return;
    const double n = static_cast<double>(batch.cols());
    const Eigen::VectorXd bmean = batch.rowwise().mean();
    const Eigen::VectorXd bvar = (batch.colwise() - bmean).array().square().rowwise().mean();
    const double total = count_ + n;
    const Eigen::VectorXd delta = bmean - mean_;
    mean_ += delta * (n / total);
    var_ = (var_ * count_ + bvar * n + delta.cwiseAbs2() * (count_ * n / total)) / total;
    count_ = total;
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    if (!enabled_) return x;
    return ((x - mean_).array() / (var_.array() + 1e-8).sqrt()).cwiseMax(-clip_).cwiseMin(clip_).matrix();
  }

  // x: dim x n
  Eigen::MatrixXd normalize_batch(const Eigen::MatrixXd& x) const {
    if (!enabled_) return x;
    const Eigen::ArrayXd inv = (var_.array() + 1e-8).rsqrt();
    return ((x.colwise() - mean_).array().colwise() * inv).cwiseMax(-clip_).cwiseMin(clip_).matrix();
  }

  nlohmann::json to_json() const {
    return {{"enabled", enabled_},
            {"count", count_},
            {"clip", clip_},
            {"mean", std::vector<double>(mean_.data(), mean_.data() + mean_.size())},
            {"var", std::vector<double>(var_.data(), var_.data() + var_.size())}};
  }

  static RunningNormalizer from_json(const nlohmann::json& j) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto var = j.at("var").get<std::vector<double>>();
    if (mean.size() != var.size()) throw ParseError("normalizer size mismatch");
    RunningNormalizer r(static_cast<int>(mean.size()), j.value("clip", 10.0));
    r.enabled_ = j.value("enabled", true);
    r.count_ = j.at("count").get<double>();
    for (std::size_t i = 0; i < mean.size(); ++i) {
      r.mean_[i] = mean[i];
      r.var_[i] = var[i];
    }
    r.frozen_ = true;
    return r;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;
  double count_ = 1e-4;
  double clip_ = 10.0;
  bool frozen_ = false;
  bool enabled_ = true;
};

}  // namespace handmimic::nn

#endif  // HANDMIMIC_NN_HPP_
