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

#ifndef HANDMIMIC_RL_TRAIN_HPP_
#define HANDMIMIC_RL_TRAIN_HPP_

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "handmimic/env.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/nn.hpp"
#include "handmimic/rl/curve.hpp"
#include "handmimic/rl/evaluate.hpp"
#include "handmimic/rl/ppo.hpp"
#include "handmimic/rl/sac.hpp"

namespace handmimic::rl {

enum class Precision { kFloat32, kFloat64 };

struct TrainOutput {
  LearningCurve curve;
  PolicySnapshot policy;
  nlohmann::json checkpoint;
};

namespace detail {

template <typename Trainer>
TrainOutput RunTrainer(Trainer& trainer, std::vector<std::string> columns, const std::string& out_dir) {
  TrainOutput out{LearningCurve(std::move(columns)), {}, {}};
  const std::filesystem::path dir(out_dir);
  try {
    trainer.train(out.curve);
  } catch (...) {
    // Keep whatever was logged before the failure.
    if (!out_dir.empty()) out.curve.write_csv((dir / "curve.csv").string());
    throw;
  }
  out.policy = trainer.snapshot();
  out.checkpoint = trainer.checkpoint();
  if (!out_dir.empty()) {
    out.curve.write_csv((dir / "curve.csv").string());
    std::ofstream f(dir / "checkpoint.json");
    if (!f) throw Error("cannot write checkpoint in " + out_dir);
    f << out.checkpoint.dump(1) << '\n';
  }
  return out;
}

}  // namespace detail

// Trains one policy. When out_dir is non-empty it must exist; curve.csv and
// checkpoint.json are written there.
inline TrainOutput train_ppo(const EnvSpec& spec, const PpoConfig& cfg, const std::string& out_dir = "",
                             Precision precision = Precision::kFloat32) {
  if (precision == Precision::kFloat64) {
    PpoTrainer<double> t(spec, cfg);
    return detail::RunTrainer(t, ppo_curve_columns(), out_dir);
  }
  PpoTrainer<float> t(spec, cfg);
  return detail::RunTrainer(t, ppo_curve_columns(), out_dir);
}

inline TrainOutput train_sac(const EnvSpec& spec, const SacConfig& cfg, const std::string& out_dir = "",
                             Precision precision = Precision::kFloat32) {
  if (precision == Precision::kFloat64) {
    SacTrainer<double> t(spec, cfg);
    return detail::RunTrainer(t, sac_curve_columns(), out_dir);
  }
  SacTrainer<float> t(spec, cfg);
  return detail::RunTrainer(t, sac_curve_columns(), out_dir);
}

// Restores the deterministic policy from a checkpoint written by a trainer.
inline PolicySnapshot policy_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw ParseError("unsupported checkpoint version");
    PolicySnapshot s;
    s.algo = j.at("algo").get<std::string>();
    if (s.algo != "ppo" && s.algo != "sac") throw ParseError("unknown checkpoint algo '" + s.algo + "'");
    s.squash = s.algo == "sac";
    s.policy = nn::GaussianPolicy<double>::from_json(j.at("policy"));
    s.normalizer = nn::RunningNormalizer::from_json(j.at("normalizer"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

inline PolicySnapshot load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open checkpoint " + path);
  try {
    return policy_from_checkpoint(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }
}

}  // namespace handmimic::rl

#endif  // HANDMIMIC_RL_TRAIN_HPP_
