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

#ifndef HANDMIMIC_CONFIG_HPP_
#define HANDMIMIC_CONFIG_HPP_

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "handmimic/dynamics.hpp"
#include "handmimic/env.hpp"
#include "handmimic/errors.hpp"
#include "handmimic/hand_model.hpp"
#include "handmimic/motion.hpp"
#include "handmimic/reward.hpp"
#include "handmimic/rl/ppo.hpp"
#include "handmimic/rl/sac.hpp"

namespace handmimic {

namespace detail {

inline void CheckKeys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void Read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

// Either a motion file or a synthetic motion description.
struct MotionSource {
  std::optional<std::string> path;
  MotionSynthSpec synth;
};

struct TuningSettings {
  double bound = 1.0;
  int budget = 60;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string topology = "default";  // "default", "reduced" or a topology file
  MotionSource motion;
  PdGains gains;
  RewardSpec reward;
  SimConfig sim;
  EpisodeConfig episode;
  std::string algo = "ppo";
  rl::PpoConfig ppo = rl::PpoConfig::table_a1_best();
  rl::SacConfig sac;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "out";
  std::string checkpoint;
  int eval_steps = 2000;
  TuningSettings tuning;

  void validate() const {
    if (algo != "ppo" && algo != "sac") throw ConfigError("algo must be 'ppo' or 'sac'");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (eval_steps < 0) throw ConfigError("eval_steps must be >= 0");
    try {
      gains.validate();
      reward.validate();
      sim.validate();
      episode.validate();
      ppo.validate();
      sac.validate();
    } catch (const InvalidSpec& e) {
      throw ConfigError(e.what());
    }
    if (!(tuning.bound > 0.0) || tuning.budget < 5) throw ConfigError("tuning: bound > 0 and budget >= 5 required");
  }

  std::shared_ptr<const HandTopology> make_topology() const {
    if (topology == "default") return std::make_shared<const HandTopology>(build_default_hand());
    if (topology == "reduced") return std::make_shared<const HandTopology>(build_reduced_hand());
    return std::make_shared<const HandTopology>(load_topology(topology));
  }

  std::shared_ptr<const ReferenceMotion> make_motion(const HandTopology& topo) const {
    if (motion.path) return std::make_shared<const ReferenceMotion>(load_motion(*motion.path, topo));
    return std::make_shared<const ReferenceMotion>(synth_motion(motion.synth, topo));
  }

  EnvSpec make_env_spec() const {
    EnvSpec s;
    s.topology = make_topology();
    s.motion = make_motion(*s.topology);
    s.gains = gains;
    s.reward = reward;
    s.sim = sim;
    s.episode = episode;
    s.validate();
    return s;
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json motion;
  if (c.motion.path) {
    motion["path"] = *c.motion.path;
  } else {
    motion["synth"] = {{"kind", to_string(c.motion.synth.kind)},
                       {"amplitude", c.motion.synth.amplitude},
                       {"center", c.motion.synth.center},
                       {"frequency", c.motion.synth.frequency},
                       {"duration", c.motion.synth.duration},
                       {"fps", c.motion.synth.fps},
                       {"seed", c.motion.synth.seed},
                       {"name", c.motion.synth.name}};
  }
  return {
      {"topology", c.topology},
      {"motion", motion},
      {"gains", {{"kp", c.gains.kp}, {"kd", c.gains.kd}}},
      {"reward",
       {{"w_pose", c.reward.w_pose}, {"w_velocity", c.reward.w_velocity},
        {"w_end_effector", c.reward.w_end_effector}, {"w_root", c.reward.w_root},
        {"k_pose", c.reward.k_pose}, {"k_velocity", c.reward.k_velocity},
        {"k_end_effector", c.reward.k_end_effector}, {"k_root", c.reward.k_root}}},
      {"sim",
       {{"sim_hz", c.sim.sim_hz}, {"control_hz", c.sim.control_hz}, {"inertia", c.sim.inertia},
        {"velocity_cap", c.sim.velocity_cap}, {"motor", to_string(c.sim.motor)}}},
      {"episode",
       {{"episode_steps", c.episode.episode_steps}, {"init_mode", to_string(c.episode.init_mode)},
        {"velocity_target", to_string(c.episode.velocity_target)},
        {"include_fingertips", c.episode.include_fingertips}}},
      {"algo", c.algo},
      {"ppo", rl::to_json(c.ppo)},
      {"sac", rl::to_json(c.sac)},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"checkpoint", c.checkpoint},
      {"eval_steps", c.eval_steps},
      {"tuning", {{"bound", c.tuning.bound}, {"budget", c.tuning.budget}, {"seed", c.tuning.seed}}},
  };
}

namespace detail {

inline void ReadHidden(const nlohmann::json& j, std::vector<int>& hidden, nn::Activation& act,
                       const std::string& where) {
  Read(j, "hidden", hidden, where);
  if (j.contains("activation")) act = nn::activation_from_string(j.at("activation").get<std::string>());
}

inline rl::PpoConfig PpoFromJson(const nlohmann::json& j, rl::PpoConfig c) {
  const std::string w = "ppo";
  CheckKeys(j, {"learning_rate", "n_steps", "batch_size", "n_epochs", "gamma", "gae_lambda", "clip_ratio",
                "ent_coef", "vf_coef", "max_grad_norm", "log_std_init", "ortho_init", "weight_decay", "hidden",
                "activation", "normalize_observations", "total_steps", "eval_interval", "eval_steps", "seed"},
            w);
  Read(j, "learning_rate", c.learning_rate, w);
  Read(j, "n_steps", c.n_steps, w);
  Read(j, "batch_size", c.batch_size, w);
  Read(j, "n_epochs", c.n_epochs, w);
  Read(j, "gamma", c.gamma, w);
  Read(j, "gae_lambda", c.gae_lambda, w);
  Read(j, "clip_ratio", c.clip_ratio, w);
  Read(j, "ent_coef", c.ent_coef, w);
  Read(j, "vf_coef", c.vf_coef, w);
  Read(j, "max_grad_norm", c.max_grad_norm, w);
  Read(j, "log_std_init", c.log_std_init, w);
  Read(j, "ortho_init", c.ortho_init, w);
  Read(j, "weight_decay", c.weight_decay, w);
  ReadHidden(j, c.hidden, c.activation, w);
  Read(j, "normalize_observations", c.normalize_observations, w);
  Read(j, "total_steps", c.total_steps, w);
  Read(j, "eval_interval", c.eval_interval, w);
  Read(j, "eval_steps", c.eval_steps, w);
  Read(j, "seed", c.seed, w);
  return c;
}

inline rl::SacConfig SacFromJson(const nlohmann::json& j, rl::SacConfig c) {
  const std::string w = "sac";
  CheckKeys(j, {"learning_rate", "buffer_size", "tau", "gamma", "batch_size", "learning_starts", "auto_alpha",
                "alpha", "target_entropy", "log_std_init", "hidden", "activation", "normalize_observations",
                "total_steps", "eval_interval", "eval_steps", "seed"},
            w);
  Read(j, "learning_rate", c.learning_rate, w);
  Read(j, "buffer_size", c.buffer_size, w);
  Read(j, "tau", c.tau, w);
  Read(j, "gamma", c.gamma, w);
  Read(j, "batch_size", c.batch_size, w);
  Read(j, "learning_starts", c.learning_starts, w);
  Read(j, "auto_alpha", c.auto_alpha, w);
  Read(j, "alpha", c.alpha, w);
  if (j.contains("target_entropy") && !j.at("target_entropy").is_null()) Read(j, "target_entropy", c.target_entropy, w);
  Read(j, "log_std_init", c.log_std_init, w);
  ReadHidden(j, c.hidden, c.activation, w);
  Read(j, "normalize_observations", c.normalize_observations, w);
  Read(j, "total_steps", c.total_steps, w);
  Read(j, "eval_interval", c.eval_interval, w);
  Read(j, "eval_steps", c.eval_steps, w);
  Read(j, "seed", c.seed, w);
  return c;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::CheckKeys;
  using detail::Read;
  ExperimentConfig c;
  CheckKeys(j, {"topology", "motion", "gains", "reward", "sim", "episode", "algo", "ppo", "sac", "seeds",
                "output_dir", "checkpoint", "eval_steps", "tuning"},
            "config");
  try {
    Read(j, "topology", c.topology, "config");
    if (j.contains("motion")) {
      const auto& m = j.at("motion");
      CheckKeys(m, {"path", "synth"}, "motion");
      if (m.contains("path") && m.contains("synth")) throw ConfigError("motion: give either path or synth");
      if (m.contains("path")) c.motion.path = m.at("path").get<std::string>();
      if (m.contains("synth")) {
        const auto& s = m.at("synth");
        CheckKeys(s, {"kind", "amplitude", "center", "frequency", "duration", "fps", "seed", "name"}, "motion.synth");
        if (s.contains("kind")) c.motion.synth.kind = synth_kind_from_string(s.at("kind").get<std::string>());
        Read(s, "amplitude", c.motion.synth.amplitude, "motion.synth");
        Read(s, "center", c.motion.synth.center, "motion.synth");
        Read(s, "frequency", c.motion.synth.frequency, "motion.synth");
        Read(s, "duration", c.motion.synth.duration, "motion.synth");
        Read(s, "fps", c.motion.synth.fps, "motion.synth");
        Read(s, "seed", c.motion.synth.seed, "motion.synth");
        Read(s, "name", c.motion.synth.name, "motion.synth");
      }
    }
    if (j.contains("gains")) {
      CheckKeys(j.at("gains"), {"kp", "kd"}, "gains");
      Read(j.at("gains"), "kp", c.gains.kp, "gains");
      Read(j.at("gains"), "kd", c.gains.kd, "gains");
    }
    if (j.contains("reward")) {
      const auto& r = j.at("reward");
      CheckKeys(r, {"w_pose", "w_velocity", "w_end_effector", "w_root", "k_pose", "k_velocity", "k_end_effector",
                    "k_root"},
                "reward");
      Read(r, "w_pose", c.reward.w_pose, "reward");
      Read(r, "w_velocity", c.reward.w_velocity, "reward");
      Read(r, "w_end_effector", c.reward.w_end_effector, "reward");
      Read(r, "w_root", c.reward.w_root, "reward");
      Read(r, "k_pose", c.reward.k_pose, "reward");
      Read(r, "k_velocity", c.reward.k_velocity, "reward");
      Read(r, "k_end_effector", c.reward.k_end_effector, "reward");
      Read(r, "k_root", c.reward.k_root, "reward");
    }
    if (j.contains("sim")) {
      const auto& s = j.at("sim");
      CheckKeys(s, {"sim_hz", "control_hz", "inertia", "velocity_cap", "motor"}, "sim");
      Read(s, "sim_hz", c.sim.sim_hz, "sim");
      Read(s, "control_hz", c.sim.control_hz, "sim");
      Read(s, "inertia", c.sim.inertia, "sim");
      Read(s, "velocity_cap", c.sim.velocity_cap, "sim");
      if (s.contains("motor")) c.sim.motor = motor_model_from_string(s.at("motor").get<std::string>());
    }
    if (j.contains("episode")) {
      const auto& e = j.at("episode");
      CheckKeys(e, {"episode_steps", "init_mode", "velocity_target", "include_fingertips"}, "episode");
      Read(e, "episode_steps", c.episode.episode_steps, "episode");
      if (e.contains("init_mode")) c.episode.init_mode = init_mode_from_string(e.at("init_mode").get<std::string>());
      if (e.contains("velocity_target")) {
        c.episode.velocity_target = velocity_target_from_string(e.at("velocity_target").get<std::string>());
      }
      Read(e, "include_fingertips", c.episode.include_fingertips, "episode");
    }
    Read(j, "algo", c.algo, "config");
    if (j.contains("ppo")) c.ppo = detail::PpoFromJson(j.at("ppo"), c.ppo);
    if (j.contains("sac")) c.sac = detail::SacFromJson(j.at("sac"), c.sac);
    Read(j, "seeds", c.seeds, "config");
    Read(j, "output_dir", c.output_dir, "config");
    Read(j, "checkpoint", c.checkpoint, "config");
    Read(j, "eval_steps", c.eval_steps, "config");
    if (j.contains("tuning")) {
      const auto& t = j.at("tuning");
      CheckKeys(t, {"bound", "budget", "seed"}, "tuning");
      Read(t, "bound", c.tuning.bound, "tuning");
      Read(t, "budget", c.tuning.budget, "tuning");
      Read(t, "seed", c.tuning.seed, "tuning");
    }
  } catch (const InvalidSpec& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace handmimic

#endif  // HANDMIMIC_CONFIG_HPP_
