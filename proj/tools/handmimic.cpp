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

// Command-line front end. Every run writes manifest.json into its output
// directory; `handmimic rerun --manifest FILE` replays it.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "handmimic/analysis.hpp"
#include "handmimic/bayesopt.hpp"
#include "handmimic/config.hpp"
#include "handmimic/rl/evaluate.hpp"
#include "handmimic/rl/sweep.hpp"
#include "handmimic/rl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace handmimic {
namespace {

constexpr int kManifestVersion = 1;

bool Verbose() {
  const char* v = std::getenv("HANDMIMIC_LOG");
  return !(v && std::string(v) == "quiet");
}

void Log(const std::string& msg) {
  if (Verbose()) std::cerr << "[handmimic] " << msg << '\n';
}

std::string Fmt(double v) { return rl::LearningCurve::format(v); }

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

rl::Precision PrecisionFrom(const json& opts) {
  const std::string p = opts.value("precision", std::string("float32"));
  if (p == "float32") return rl::Precision::kFloat32;
  if (p == "float64") return rl::Precision::kFloat64;
  throw ConfigError("precision must be float32 or float64");
}

// ---------- commands ----------

void CmdConvert(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  const std::string input = opts.at("input").get<std::string>();
  std::ifstream f(input);
  if (!f) throw ParseError("cannot open pose export " + input);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError("pose export " + input + ": " + e.what());
  }
  const auto topo = cfg.make_topology();
  const ReferenceMotion m = convert_pose_export(j, *topo);
  write_motion(m, (out / "motion.json").string(), *topo);
  std::cout << "wrote " << (out / "motion.json").string() << " (" << m.num_frames() << " frames)\n";
}

void CmdTune(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  ExperimentConfig c = cfg;
  if (opts.contains("motion")) c.motion.path = opts.at("motion").get<std::string>();
  const EnvSpec spec = c.make_env_spec();
  const bayesopt::Objective objective = [&spec](const PdGains& g) { return bayesopt::control_objective(g, spec); };

  std::vector<double> bounds;
  if (opts.value("all_bounds", false)) {
    bounds = {100.0, 10.0, 1.0};
  } else {
    bounds = {opts.value("bound", c.tuning.bound)};
  }
  const int grid = opts.value("grid", 0);
  json summary = json::array();
  for (double b : bounds) {
    bayesopt::TuneOptions to;
    to.bound = b;
    to.budget = opts.value("budget", c.tuning.budget);
    to.seed = c.tuning.seed;
    Log("tuning on [0, " + Fmt(b) + "]^2 with budget " + std::to_string(to.budget));
    const bayesopt::TuneResult r = bayesopt::tune_controller(objective, to);
    std::ofstream trace(out / ("trace_bound_" + Fmt(b) + ".csv"));
    r.write_trace_csv(trace);
    json s = {{"bound", b},
              {"budget", to.budget},
              {"best_kp", r.best.kp},
              {"best_kd", r.best.kd},
              {"best_epsilon", r.best_epsilon},
              {"pcc_kp", r.pcc_kp ? json(*r.pcc_kp) : json(nullptr)},
              {"pcc_kd", r.pcc_kd ? json(*r.pcc_kd) : json(nullptr)}};
    if (grid > 1) {
      const bayesopt::GridResult g = bayesopt::grid_search(objective, b, grid);
      s["grid_n"] = grid;
      s["grid_best_kp"] = g.best.kp;
      s["grid_best_kd"] = g.best.kd;
      s["grid_best_epsilon"] = g.best_epsilon;
    }
    std::cout << "bound " << Fmt(b) << ": kp=" << Fmt(r.best.kp) << " kd=" << Fmt(r.best.kd)
              << " epsilon=" << Fmt(r.best_epsilon) << '\n';
    summary.push_back(s);
  }
  WriteText(out / "summary.json", summary.dump(2) + "\n");
}

void CmdTrain(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  const std::string algo = opts.value("algo", cfg.algo);
  if (algo != "ppo" && algo != "sac") throw ConfigError("algo must be 'ppo' or 'sac'");
  const rl::Precision precision = PrecisionFrom(opts);
  const EnvSpec spec = cfg.make_env_spec();
  const double retarget = rl::retarget_baseline(spec, cfg.eval_steps).cumulative;

  std::ostringstream summary;
  summary << "seed,final_eval_mean_reward,eval_cumulative_reward\n";
  std::vector<double> finals;
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    Log("training " + algo + " seed " + std::to_string(seed));
    rl::TrainOutput o{rl::LearningCurve({}), {}, {}};
    if (algo == "ppo") {
      rl::PpoConfig pc = cfg.ppo;
      pc.seed = seed;
      if (opts.contains("total_steps")) pc.total_steps = opts.at("total_steps").get<long>();
      o = rl::train_ppo(spec, pc, dir.string(), precision);
    } else {
      rl::SacConfig sc = cfg.sac;
      sc.seed = seed;
      if (opts.contains("total_steps")) sc.total_steps = opts.at("total_steps").get<long>();
      o = rl::train_sac(spec, sc, dir.string(), precision);
    }
    const auto& rows = o.curve.rows();
    const double final_eval = rows.empty() ? 0.0 : rows.back()[o.curve.column("eval_mean_reward")];
    const double cumulative = rl::evaluate(o.policy, spec, cfg.eval_steps).cumulative;
    finals.push_back(cumulative);
    summary << seed << ',' << Fmt(final_eval) << ',' << Fmt(cumulative) << '\n';
    std::cout << algo << " seed " << seed << ": final eval mean step reward " << Fmt(final_eval)
              << ", " << cfg.eval_steps << "-step reward " << Fmt(cumulative) << '\n';
  }
  WriteText(out / "summary.csv", summary.str());

  rl::ComparisonRow row;
  row.motion = cfg.motion.path ? fs::path(*cfg.motion.path).stem().string() : to_string(cfg.motion.synth.kind);
  row.retargeting = retarget;
  (algo == "ppo" ? row.ppo : row.sac) = rl::summarize(finals);
  std::ostringstream csv;
  rl::write_comparison_csv(csv, {row});
  WriteText(out / "comparison.csv", csv.str());
  WriteText(out / "comparison.md", rl::render_comparison_markdown({row}));
}

void CmdEvaluate(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  const EnvSpec spec = cfg.make_env_spec();
  const int steps = opts.value("steps", cfg.eval_steps);
  std::string label;
  rl::EvalResult r;
  if (opts.contains("policy")) {
    label = opts.at("policy").get<std::string>();
    r = rl::evaluate(rl::load_checkpoint(label), spec, steps);
  } else {
    label = opts.value("oracle", std::string("retarget"));
    if (label == "retarget") {
      r = rl::retarget_baseline(spec, steps);
    } else if (label == "random") {
      r = rl::random_baseline(spec, steps, cfg.seeds.front());
    } else {
      throw ConfigError("oracle must be 'retarget' or 'random'");
    }
  }
  WriteText(out / "eval.csv", "policy,steps,cumulative_reward,mean_step_reward\n" + label + "," +
                                  std::to_string(r.steps) + "," + Fmt(r.cumulative) + "," + Fmt(r.mean_step()) +
                                  "\n");
  std::cout << "cumulative reward over " << r.steps << " steps: " << Fmt(r.cumulative) << '\n';
}

void CmdRetarget(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  const int steps = opts.value("steps", cfg.eval_steps);
  std::ostringstream csv;
  csv << "motion,steps,cumulative_reward,mean_step_reward\n";
  auto run = [&](const ExperimentConfig& c, const std::string& name) {
    const rl::EvalResult r = rl::retarget_baseline(c.make_env_spec(), steps);
    csv << name << ',' << r.steps << ',' << Fmt(r.cumulative) << ',' << Fmt(r.mean_step()) << '\n';
    std::cout << name << ": " << Fmt(r.cumulative) << '\n';
  };
  if (opts.value("all_synth", false)) {
    for (SynthKind k : {SynthKind::kHold, SynthKind::kRamp, SynthKind::kSinusoid}) {
      ExperimentConfig c = cfg;
      c.motion.path.reset();
      c.motion.synth.kind = k;
      run(c, to_string(k));
    }
  } else {
    run(cfg, cfg.motion.path ? fs::path(*cfg.motion.path).stem().string() : to_string(cfg.motion.synth.kind));
  }
  WriteText(out / "retarget.csv", csv.str());
}

void CmdSweep(const ExperimentConfig& cfg, const json& opts, const fs::path& out) {
  const EnvSpec spec = cfg.make_env_spec();
  rl::SweepOptions so;
  so.mode = rl::sweep_mode_from_string(opts.value("mode", std::string("bayes")));
  so.budget = opts.value("budget", 46);
  so.seed = cfg.seeds.front();
  rl::PpoConfig base = cfg.ppo;
  base.seed = cfg.seeds.front();
  base.total_steps = opts.value("trial_steps", 20000L);
  const rl::TrialFn trial = rl::make_ppo_trial(spec, cfg.eval_steps, PrecisionFrom(opts));
  int done = 0;
  const auto records = rl::run_sweep(rl::SweepGrid{}, base,
                                     [&](const rl::PpoConfig& c) {
                                       const double v = trial(c);
                                       Log("trial " + std::to_string(++done) + ": reward " + Fmt(v));
                                       return v;
                                     },
                                     so);
  std::ofstream f(out / "sweep.csv");
  analysis::write_sweep(f, records);
  const auto best = analysis::sorted_by_reward(records, false).front();
  std::cout << records.size() << " trials; best reward " << Fmt(best.mean_reward) << '\n';
}

void CmdAnalyze(const ExperimentConfig&, const json& opts, const fs::path& out) {
  std::vector<analysis::SweepRecord> records;
  if (opts.contains("sweep")) {
    records = analysis::load_sweep(opts.at("sweep").get<std::string>());
  } else {
    const std::string fixture = opts.value("fixture", std::string("tableA1"));
    if (fixture != "tableA1") throw ConfigError("unknown fixture '" + fixture + "'");
    records = analysis::table_a1();
  }
  const bool log_scale = opts.value("log_scale", false);
  const analysis::CorrelationMatrix m = analysis::correlation_matrix(records, log_scale);
  std::ofstream f(out / "matrix.csv");
  m.write_csv(f);
  if (opts.value("svg", false)) WriteText(out / "matrix.svg", analysis::correlation_svg(m));
  const auto& r = m.r[3][8];
  std::cout << records.size() << " runs; PCC(log_std_init, mean_reward) = " << (r ? Fmt(*r) : "undefined") << '\n';
}

using Command = void (*)(const ExperimentConfig&, const json&, const fs::path&);

Command Lookup(const std::string& name) {
  if (name == "convert") return CmdConvert;
  if (name == "tune-controller") return CmdTune;
  if (name == "train") return CmdTrain;
  if (name == "evaluate") return CmdEvaluate;
  if (name == "retarget") return CmdRetarget;
  if (name == "sweep") return CmdSweep;
  if (name == "analyze") return CmdAnalyze;
  throw ConfigError("unknown command '" + name + "'");
}

json Manifest(const std::string& command, const ExperimentConfig& cfg, const json& opts) {
  return {{"format_version", kManifestVersion},
          {"command", command},
          {"options", opts},
          {"config", to_json(cfg)},
          {"seeds", cfg.seeds},
          {"versions",
           {{"handmimic", HANDMIMIC_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__}}}};
}

void Run(const std::string& command, ExperimentConfig cfg, const json& opts, const std::string& out_override) {
  const Command fn = Lookup(command);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  WriteText(out / "manifest.json", Manifest(command, cfg, opts).dump(2) + "\n");
  fn(cfg, opts, out);
}

int Main(int argc, char** argv) {
  CLI::App app{"handmimic: robotic hand motion imitation workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", HANDMIMIC_VERSION);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the seed list with a single seed");
    sub->add_option("--out", out_dir, "Output directory");
  };

  json opts = json::object();
  std::string s_input, s_motion, s_algo, s_precision = "float32", s_policy, s_oracle, s_mode, s_sweep,
                                      s_fixture, s_manifest;
  double bound = 0.0;
  int budget = 0, grid = 0, steps = 0;
  long total_steps = 0, trial_steps = 0;
  bool all_bounds = false, all_synth = false, log_scale = false, svg = false;

  auto* convert = app.add_subcommand("convert", "Convert a pose export into a motion file");
  add_common(convert);
  convert->add_option("--input", s_input, "Pose export file")->required();

  auto* tune = app.add_subcommand("tune-controller", "Bayesian search over PD gains");
  add_common(tune);
  tune->add_option("--bound", bound, "Search box [0, bound]^2");
  tune->add_option("--budget", budget, "Objective evaluations");
  tune->add_option("--motion", s_motion, "Reference motion file");
  tune->add_flag("--all-bounds", all_bounds, "Run bounds 100, 10 and 1");
  tune->add_option("--grid", grid, "Also run an n x n grid search for comparison");

  auto* train = app.add_subcommand("train", "Train PPO or SAC policies, one per seed");
  add_common(train);
  train->add_option("--algo", s_algo)->check(CLI::IsMember({"ppo", "sac"}));
  train->add_option("--total-steps", total_steps);
  train->add_option("--precision", s_precision)->check(CLI::IsMember({"float32", "float64"}));

  auto* evaluate = app.add_subcommand("evaluate", "Cumulative reward of a policy or oracle");
  add_common(evaluate);
  evaluate->add_option("--policy", s_policy, "Checkpoint file");
  evaluate->add_option("--oracle", s_oracle)->check(CLI::IsMember({"retarget", "random"}));
  evaluate->add_option("--steps", steps);

  auto* retarget = app.add_subcommand("retarget", "Retargeting baseline reward");
  add_common(retarget);
  retarget->add_option("--steps", steps);
  retarget->add_flag("--all-synth", all_synth, "Evaluate hold, ramp and sinusoid motions");

  auto* sweep = app.add_subcommand("sweep", "PPO hyperparameter sweep");
  add_common(sweep);
  sweep->add_option("--mode", s_mode)->check(CLI::IsMember({"bayes", "random", "exhaustive"}));
  sweep->add_option("--budget", budget);
  sweep->add_option("--trial-steps", trial_steps, "Training steps per trial");
  sweep->add_option("--precision", s_precision)->check(CLI::IsMember({"float32", "float64"}));

  auto* analyze = app.add_subcommand("analyze", "Correlation matrix of a sweep");
  add_common(analyze);
  auto* o_sweep = analyze->add_option("--sweep", s_sweep, "Sweep CSV");
  analyze->add_option("--fixture", s_fixture, "Bundled fixture")->excludes(o_sweep);
  analyze->add_flag("--log-scale", log_scale, "log10 of learning rate and weight decay");
  analyze->add_flag("--svg", svg, "Also write matrix.svg");

  auto* rerun = app.add_subcommand("rerun", "Replay a run from its manifest");
  rerun->add_option("--manifest", s_manifest)->required()->check(CLI::ExistingFile);
  rerun->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rerun->parsed()) {
      std::ifstream f(s_manifest);
      json m;
      try {
        m = json::parse(f);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
      }
      if (m.value("format_version", 0) != kManifestVersion) throw ConfigError("unsupported manifest version");
      Run(m.at("command").get<std::string>(), config_from_json(m.at("config")), m.at("options"), out_dir);
      return 0;
    }

    CLI::App* sub = app.get_subcommands().front();
    ExperimentConfig cfg = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
    if (sub->count("--seed")) {
      cfg.seeds = {seed};
      cfg.tuning.seed = seed;
    }
    auto set = [&](const char* flag, const char* key, auto value) {
      if (sub->get_option_no_throw(flag) && sub->count(flag)) opts[key] = value;
    };
    set("--input", "input", s_input);
    set("--bound", "bound", bound);
    set("--budget", "budget", budget);
    set("--motion", "motion", s_motion);
    set("--grid", "grid", grid);
    set("--algo", "algo", s_algo);
    set("--total-steps", "total_steps", total_steps);
    set("--precision", "precision", s_precision);
    set("--policy", "policy", s_policy);
    set("--oracle", "oracle", s_oracle);
    set("--steps", "steps", steps);
    set("--mode", "mode", s_mode);
    set("--trial-steps", "trial_steps", trial_steps);
    set("--sweep", "sweep", s_sweep);
    set("--fixture", "fixture", s_fixture);
    if (all_bounds) opts["all_bounds"] = true;
    if (all_synth) opts["all_synth"] = true;
    if (log_scale) opts["log_scale"] = true;
    if (svg) opts["svg"] = true;
    // Paths in the manifest are made absolute so a rerun from elsewhere works.
    for (const char* key : {"input", "motion", "policy", "sweep"}) {
      if (opts.contains(key)) opts[key] = fs::absolute(opts[key].get<std::string>()).string();
    }
    if (cfg.motion.path) cfg.motion.path = fs::absolute(*cfg.motion.path).string();
    if (cfg.topology != "default" && cfg.topology != "reduced") cfg.topology = fs::absolute(cfg.topology).string();
    Run(sub->get_name(), cfg, opts, out_dir);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace
}  // namespace handmimic

int main(int argc, char** argv) { return handmimic::Main(argc, argv); }
