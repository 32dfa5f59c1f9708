#include "semsat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "semsat/errors.hpp"
#include "semsat/rng.hpp"

namespace semsat {

namespace {

// Seed-derivation salts. Stream ids are part of the derivation, so adding a
// stream or a sweep point never changes the draws of an existing one. Arms
// compared head to head share one training stream per (point, replication):
// common random numbers, so optimizer noise cancels in paired differences.
constexpr std::uint64_t kTrainSalt = 21;
constexpr std::uint64_t kEvalSalt = 22;

constexpr int kStreamRetrained = 1;  // delay sweep, grpo and ppo
constexpr int kStreamFixed = 2;      // delay sweep, anchor-weighting model
constexpr int kStreamPower = 11;     // power sweep, every trained arm

SemWeights delay_weighting(double theta_d) {
  SemWeights w;
  w.theta_d = theta_d;
  w.theta_r = (1.0 - theta_d) / 2.0;
  w.theta_c = (1.0 - theta_d) / 2.0;
  return w;
}

void finalize_curve(ArmCurve& curve) {
  curve.mean.assign(curve.reps.size(), 0.0);
  curve.stddev.assign(curve.reps.size(), 0.0);
  for (std::size_t i = 0; i < curve.reps.size(); ++i) {
    const auto& r = curve.reps[i];
    double m = 0.0;
    for (double v : r) m += v;
    m /= static_cast<double>(r.size());
    curve.mean[i] = m;
    if (r.size() > 1) {
      double ss = 0.0;
      for (double v : r) ss += (v - m) * (v - m);
      curve.stddev[i] = std::sqrt(ss / static_cast<double>(r.size() - 1));
    }
  }
}

double eval_policy_impl(SatEnv& env, const MlpPolicy& policy, std::uint64_t master,
                        int replication, int episodes, std::vector<TaskEvent>* first_events) {
  double sum = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    sum += evaluate_episode(env, policy, eval_seed(master, replication, ep));
    if (ep == 0 && first_events != nullptr) {
      *first_events = env.event_log();
    }
  }
  return sum / static_cast<double>(episodes);
}

// Episode score recomputed from recorded task outcomes under different
// weights. Completion is weight-independent, so this matches what the
// environment would have paid had it run with w.
double reweighted_score(const ScenarioConfig& scn, const std::vector<Task>& tasks,
                        const SemWeights& w) {
  double s = 0.0;
  for (const Task& t : tasks) {
    if (t.status != TaskStatus::DONE) continue;
    TaskOutcome o;
    o.delay_s = t.finish_time_s - t.arrival_time_s;
    o.quality_db = t.quality_db;
    o.compute_gflop = t.compute_gflop;
    o.completed = true;
    s += sem_value(o, w, scn.norm_refs(t.deadline_s - t.arrival_time_s, t.theta_min_db));
  }
  return s / static_cast<double>(scn.num_tasks);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoFailure("cannot open '" + path.string() + "' for writing");
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoFailure("error writing '" + path.string() + "'");
  }
}

}  // namespace

std::uint64_t eval_seed(std::uint64_t master, int replication, int episode) {
  return derive_seed(master, kEvalSalt, static_cast<std::uint64_t>(replication),
                     static_cast<std::uint64_t>(episode));
}

std::uint64_t train_seed(std::uint64_t master, int stream_id, int point, int replication) {
  return derive_seed(master, kTrainSalt, static_cast<std::uint64_t>(stream_id),
                     static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(replication));
}

TrainConfig make_train_config(const RunConfig& cfg, const SatEnv& env, std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.seed = seed;
  t.init_bias.clear();
  for (int h = env.motion_head_begin(); h < env.num_heads(); ++h) {
    t.init_bias.push_back(HeadBias{h, 0, cfg.motion_hover_bias});
  }
  return t;
}

double evaluate_policy(SatEnv& env, const MlpPolicy& policy, std::uint64_t master,
                       int replication, int episodes) {
  return eval_policy_impl(env, policy, master, replication, episodes, nullptr);
}

std::vector<BreakdownRow> run_mode_level_breakdown(const RunConfig& cfg) {
  validate_scenario(cfg.scenario);
  validate_experiment(cfg.experiment);
  const ExperimentSpec& spec = cfg.experiment;
  const ModeProfile& modes = cfg.scenario.modes;
  if (modes.max_steps < 16) {
    throw BadConfig("mode-level breakdown needs max_steps >= 16");
  }

  const std::vector<HopSpec> hops = {
      {spec.breakdown_rate_bps,
       spec.breakdown_prop_distance_m / cfg.scenario.isl.light_speed_mps}};
  const NormRefs refs =
      cfg.scenario.norm_refs(spec.breakdown_d_max_s, spec.breakdown_theta_min_db);

  std::vector<BreakdownRow> rows;
  for (int level = 1; level <= 3; ++level) {
    BreakdownRow row;
    row.level = level;
    row.choice.mode = Mode::TEXT_IMAGE;
    row.choice.layer = level;
    row.choice.denoise_steps = 4 << (level - 1);
    validate_choice(row.choice, modes);

    const ComputeCost cc = compute_cost(row.choice, modes);
    row.delay_s = task_delay_s(payload_bits(row.choice, modes), hops, cc.tx_gflop,
                               cfg.scenario.tx_throughput_gflops, cc.rx_gflop,
                               cfg.scenario.rx_throughput_gflops);
    row.quality_db = quality_db(row.choice, modes);
    row.compute_gflop = cc.total();

    TaskOutcome o;
    o.delay_s = row.delay_s;
    o.quality_db = row.quality_db;
    o.compute_gflop = row.compute_gflop;
    o.completed = true;
    row.terms = sem_terms(o, refs);
    row.sem = sem_value(o, cfg.scenario.weights, refs);
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_delay_weight_sweep(const RunConfig& cfg) {
  validate_scenario(cfg.scenario);
  validate_experiment(cfg.experiment);
  const ExperimentSpec& spec = cfg.experiment;
  const std::uint64_t master = cfg.train.seed;
  const int points = static_cast<int>(spec.theta_d_values.size());
  const int reps = spec.replications;

  SweepResult result;
  result.experiment = "delay_weight";
  result.x_name = "theta_d";
  result.x = spec.theta_d_values;

  ArmCurve grpo{"grpo", {}, {}, {}};
  ArmCurve fixed{"grpo_fixed", {}, {}, {}};
  ArmCurve ppo{"ppo", {}, {}, {}};
  grpo.reps.assign(points, std::vector<double>(reps, 0.0));
  fixed.reps.assign(points, std::vector<double>(reps, 0.0));
  ppo.reps.assign(points, std::vector<double>(reps, 0.0));

  // retrained arms: one policy per (point, replication)
  for (int p = 0; p < points; ++p) {
    ScenarioConfig scn = cfg.scenario;
    scn.weights = delay_weighting(spec.theta_d_values[p]);
    for (int r = 0; r < reps; ++r) {
      {
        SatEnv env(scn);
        GrpoTrainer tr(env,
                       make_train_config(cfg, env, train_seed(master, kStreamRetrained, p, r)));
        tr.run(tr.config().updates);
        std::vector<TaskEvent>* trace =
            (p == 0 && r == 0) ? &result.traces["grpo"] : nullptr;
        grpo.reps[p][r] = eval_policy_impl(env, tr.policy(), master, r, spec.eval_episodes, trace);
      }
      {
        SatEnv env(scn);
        PpoTrainer tr(env,
                      make_train_config(cfg, env, train_seed(master, kStreamRetrained, p, r)));
        tr.run(tr.config().updates);
        std::vector<TaskEvent>* trace =
            (p == 0 && r == 0) ? &result.traces["ppo"] : nullptr;
        ppo.reps[p][r] = eval_policy_impl(env, tr.policy(), master, r, spec.eval_episodes, trace);
      }
    }
  }

  // fixed arm: trained once per replication at the anchor weighting, then the
  // recorded outcomes are rescored under every sweep weighting
  {
    ScenarioConfig scn = cfg.scenario;
    scn.weights = delay_weighting(spec.fixed_model_theta_d);
    for (int r = 0; r < reps; ++r) {
      SatEnv env(scn);
      GrpoTrainer tr(env, make_train_config(cfg, env, train_seed(master, kStreamFixed, 0, r)));
      tr.run(tr.config().updates);
      std::vector<std::vector<Task>> outcomes;
      for (int ep = 0; ep < spec.eval_episodes; ++ep) {
        evaluate_episode(env, tr.policy(), eval_seed(master, r, ep));
        outcomes.push_back(env.tasks());
        if (r == 0 && ep == 0) {
          result.traces["grpo_fixed"] = env.event_log();
        }
      }
      for (int p = 0; p < points; ++p) {
        const SemWeights w = delay_weighting(spec.theta_d_values[p]);
        double s = 0.0;
        for (const auto& tasks : outcomes) {
          s += reweighted_score(scn, tasks, w);
        }
        fixed.reps[p][r] = s / static_cast<double>(outcomes.size());
      }
    }
  }

  finalize_curve(grpo);
  finalize_curve(fixed);
  finalize_curve(ppo);
  result.arms = {grpo, fixed, ppo};
  return result;
}

SweepResult run_power_sweep(const RunConfig& cfg) {
  validate_scenario(cfg.scenario);
  validate_experiment(cfg.experiment);
  const ExperimentSpec& spec = cfg.experiment;
  const std::uint64_t master = cfg.train.seed;
  const int points = static_cast<int>(spec.power_values_w.size());
  const int reps = spec.replications;

  SweepResult result;
  result.experiment = "power";
  result.x_name = "leo_tx_power_w";
  result.x = spec.power_values_w;

  // policies are trained once per replication at the configured power
  std::vector<MlpPolicy> full_pols(reps), mode3_pols(reps), ppo_pols(reps);
  for (int r = 0; r < reps; ++r) {
    {
      SatEnv env(cfg.scenario);
      GrpoTrainer tr(env, make_train_config(cfg, env, train_seed(master, kStreamPower, 0, r)));
      tr.run(tr.config().updates);
      full_pols[r] = tr.policy();
    }
    {
      SatEnv env(cfg.scenario);
      env.force_mode(Mode::TEXT_IMAGE);
      GrpoTrainer tr(env, make_train_config(cfg, env, train_seed(master, kStreamPower, 0, r)));
      tr.run(tr.config().updates);
      mode3_pols[r] = tr.policy();
    }
    {
      SatEnv env(cfg.scenario);
      PpoTrainer tr(env, make_train_config(cfg, env, train_seed(master, kStreamPower, 0, r)));
      tr.run(tr.config().updates);
      ppo_pols[r] = tr.policy();
    }
  }

  ArmCurve full{"full", {}, {}, {}};
  ArmCurve hover{"hover", {}, {}, {}};
  ArmCurve mode3{"mode3", {}, {}, {}};
  ArmCurve ppo{"ppo", {}, {}, {}};
  full.reps.assign(points, std::vector<double>(reps, 0.0));
  hover.reps.assign(points, std::vector<double>(reps, 0.0));
  mode3.reps.assign(points, std::vector<double>(reps, 0.0));
  ppo.reps.assign(points, std::vector<double>(reps, 0.0));

  for (int p = 0; p < points; ++p) {
    ScenarioConfig scn = cfg.scenario;
    scn.leo_tx_power_w = spec.power_values_w[p];
    for (int r = 0; r < reps; ++r) {
      const bool capture = (p == 0 && r == 0);
      {
        SatEnv env(scn);
        full.reps[p][r] = eval_policy_impl(env, full_pols[r], master, r, spec.eval_episodes,
                                           capture ? &result.traces["full"] : nullptr);
      }
      {
        SatEnv env(scn);
        env.force_hover(true);
        hover.reps[p][r] = eval_policy_impl(env, full_pols[r], master, r, spec.eval_episodes,
                                            capture ? &result.traces["hover"] : nullptr);
      }
      {
        SatEnv env(scn);
        env.force_mode(Mode::TEXT_IMAGE);
        mode3.reps[p][r] = eval_policy_impl(env, mode3_pols[r], master, r, spec.eval_episodes,
                                            capture ? &result.traces["mode3"] : nullptr);
      }
      {
        SatEnv env(scn);
        ppo.reps[p][r] = eval_policy_impl(env, ppo_pols[r], master, r, spec.eval_episodes,
                                          capture ? &result.traces["ppo"] : nullptr);
      }
    }
  }

  finalize_curve(full);
  finalize_curve(hover);
  finalize_curve(mode3);
  finalize_curve(ppo);
  result.arms = {full, hover, mode3, ppo};
  return result;
}

std::string breakdown_csv(const std::vector<BreakdownRow>& rows) {
  std::string out =
      "level,layer,denoise_steps,delay_s,quality_db,compute_gflop,"
      "latency_term,quality_term,compute_term,sem\n";
  for (const auto& r : rows) {
    out += std::to_string(r.level) + "," + std::to_string(r.choice.layer) + "," +
           std::to_string(r.choice.denoise_steps) + "," + format_double(r.delay_s) + "," +
           format_double(r.quality_db) + "," + format_double(r.compute_gflop) + "," +
           format_double(r.terms.latency) + "," + format_double(r.terms.quality) + "," +
           format_double(r.terms.compute) + "," + format_double(r.sem) + "\n";
  }
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = result.x_name + ",arm,replication,sem,mean_sem,std_sem\n";
  for (std::size_t p = 0; p < result.x.size(); ++p) {
    for (const auto& arm : result.arms) {
      for (std::size_t r = 0; r < arm.reps[p].size(); ++r) {
        out += format_double(result.x[p]) + "," + arm.arm + "," + std::to_string(r) + "," +
               format_double(arm.reps[p][r]) + "," + format_double(arm.mean[p]) + "," +
               format_double(arm.stddev[p]) + "\n";
      }
    }
  }
  return out;
}

std::string trace_csv(const std::vector<TaskEvent>& events) {
  std::string out = "slot,task,event,delay_s,quality_db,compute_gflop,sem,detail\n";
  for (const auto& e : events) {
    out += std::to_string(e.slot) + "," + std::to_string(e.task) + "," + to_string(e.kind) +
           "," + format_double(e.delay_s) + "," + format_double(e.quality_db) + "," +
           format_double(e.compute_gflop) + "," + format_double(e.sem) + "," +
           csv_escape(e.detail) + "\n";
  }
  return out;
}

void emit_outputs(const RunConfig& cfg, const ExperimentResults& results,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoFailure("cannot create output directory '" + out_dir + "': " + ec.message());
  }

  std::vector<std::string> names;
  if (!results.breakdown.empty()) {
    write_text(fs::path(out_dir) / "breakdown.csv", breakdown_csv(results.breakdown));
    names.push_back("breakdown.csv");
  }
  for (const auto& sweep : results.sweeps) {
    const std::string csv_name = sweep.experiment + ".csv";
    write_text(fs::path(out_dir) / csv_name, sweep_csv(sweep));
    names.push_back(csv_name);
    for (const auto& [arm, events] : sweep.traces) {
      const std::string trace_name = "trace_" + sweep.experiment + "_" + arm + ".csv";
      write_text(fs::path(out_dir) / trace_name, trace_csv(events));
      names.push_back(trace_name);
    }
  }
  std::sort(names.begin(), names.end());

  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  nlohmann::json manifest;
  manifest["config_hash"] = hash_hex;
  manifest["master_seed"] = cfg.train.seed;
  manifest["version"] = kSoftwareVersion;
  manifest["outputs"] = names;
  write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

std::string pack_checkpoint(const CheckpointBundle& bundle) {
  nlohmann::json j;
  j["algo"] = bundle.algo;
  j["master_seed"] = bundle.master_seed;
  j["config"] = serialize_config(bundle.cfg);
  j["trainer"] = nlohmann::json::parse(bundle.trainer_state);
  j["policy"] = nlohmann::json::parse(bundle.policy_state);
  return j.dump(2) + "\n";
}

CheckpointBundle unpack_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BadConfig(std::string("malformed checkpoint: ") + e.what());
  }
  CheckpointBundle b;
  try {
    b.algo = j.at("algo").get<std::string>();
    b.master_seed = j.at("master_seed").get<std::uint64_t>();
    b.cfg = parse_config(j.at("config").get<std::string>());
    b.trainer_state = j.at("trainer").dump();
    b.policy_state = j.at("policy").dump();
  } catch (const nlohmann::json::exception& e) {
    throw BadConfig(std::string("incomplete checkpoint: ") + e.what());
  }
  return b;
}

TrainRun run_training(const RunConfig& cfg, const std::string& algo, std::uint64_t seed) {
  validate_scenario(cfg.scenario);
  TrainRun run;
  run.bundle.cfg = cfg;
  run.bundle.algo = algo;
  run.bundle.master_seed = seed;

  SatEnv env(cfg.scenario);
  const TrainConfig tcfg = make_train_config(cfg, env, seed);
  if (algo == "grpo") {
    GrpoTrainer tr(env, tcfg);
    run.stats = tr.run(tcfg.updates);
    run.bundle.trainer_state = tr.checkpoint();
    run.bundle.policy_state = tr.policy().serialize();
  } else if (algo == "ppo") {
    PpoTrainer tr(env, tcfg);
    run.stats = tr.run(tcfg.updates);
    run.bundle.trainer_state = tr.checkpoint();
    run.bundle.policy_state = tr.policy().serialize();
  } else {
    throw BadConfig("unknown algorithm '" + algo + "' (expected grpo or ppo)");
  }
  return run;
}

double evaluate_checkpoint(const CheckpointBundle& bundle, int episodes) {
  if (episodes < 1) {
    throw BadConfig("episodes must be >= 1");
  }
  const MlpPolicy policy = MlpPolicy::deserialize(bundle.policy_state);
  SatEnv env(bundle.cfg.scenario);
  if (policy.config().state_dim != env.state_dim()) {
    throw BadConfig("checkpoint was trained on a different scenario layout");
  }
  return evaluate_policy(env, policy, bundle.master_seed, 0, episodes);
}

}  // namespace semsat
