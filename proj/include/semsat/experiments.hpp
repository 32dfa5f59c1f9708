#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "semsat/config.hpp"
#include "semsat/env.hpp"
#include "semsat/semlink.hpp"
#include "semsat/trainer.hpp"

namespace semsat {

inline constexpr const char* kSoftwareVersion = "0.1.0";

// One row of the per-level metric breakdown: a fixed TEXT_IMAGE choice pushed
// through the delay/quality/compute formulas on the reference link, plus the
// resulting SEM terms under the configured weights.
struct BreakdownRow {
  int level = 1;
  ModeChoice choice;
  double delay_s = 0;
  double quality_db = 0;
  double compute_gflop = 0;
  SemTerms terms;
  double sem = 0;
};

/**
 * Evaluate TEXT_IMAGE levels 1..3 (compression layer k with 4 * 2^(k-1)
 * denoising steps) on the configured reference link. Deeper compression
 * shrinks the payload and buys quality with more reconstruction steps, so
 * the table exposes the latency/quality/compute trade directly.
 * @throws BadConfig
 */
std::vector<BreakdownRow> run_mode_level_breakdown(const RunConfig& cfg);

// Per-point scores of one experiment arm. reps[i] holds one score per
// replication at sweep point i; mean/stddev summarize them (sample std).
struct ArmCurve {
  std::string arm;
  std::vector<std::vector<double>> reps;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct SweepResult {
  std::string experiment;  // "delay_weight" or "power"
  std::string x_name;      // CSV column name of the swept value
  std::vector<double> x;
  std::vector<ArmCurve> arms;
  // one captured evaluation episode per arm (first point, first replication)
  std::map<std::string, std::vector<TaskEvent>> traces;
};

/**
 * Average SEM versus the delay weight theta_d, with the two remaining
 * weights split equally. Arms: "grpo" retrained per point, "grpo_fixed"
 * trained once at experiment.fixed_model_theta_d and reused everywhere,
 * "ppo" retrained per point. Evaluation seeds are shared across arms and
 * points, and "grpo" and "ppo" train on one seed stream per (point,
 * replication), so curves and per-replication differences are paired.
 * @throws BadConfig
 */
SweepResult run_delay_weight_sweep(const RunConfig& cfg);

/**
 * Average SEM versus LEO transmit power. Arms: "full" (GRPO, everything
 * enabled), "hover" (the full policy evaluated with UAVs pinned in place),
 * "mode3" (trained and evaluated with only the TEXT_IMAGE mode available),
 * "ppo". Policies are trained at the configured power and evaluated across
 * the sweep; channel realizations depend only on geometry, so every arm and
 * power level sees identical draws, and the trained arms share one training
 * seed stream per replication.
 * @throws BadConfig
 */
SweepResult run_power_sweep(const RunConfig& cfg);

struct ExperimentResults {
  std::vector<BreakdownRow> breakdown;
  std::vector<SweepResult> sweeps;
};

/**
 * Write one CSV per experiment, one trace CSV per sweep arm, and a JSON
 * manifest (config hash, master seed, software version, file list) into
 * out_dir. Empty results still produce the manifest. Deterministic: equal
 * results and config produce byte-identical files.
 * @throws IoFailure
 */
void emit_outputs(const RunConfig& cfg, const ExperimentResults& results,
                  const std::string& out_dir);

// CSV renderings used by emit_outputs, exposed for tests.
std::string breakdown_csv(const std::vector<BreakdownRow>& rows);
std::string sweep_csv(const SweepResult& result);
std::string trace_csv(const std::vector<TaskEvent>& events);

// Training settings for one run: the configured trainer block with the given
// seed and a hover-leaning initial bias on every UAV motion head.
TrainConfig make_train_config(const RunConfig& cfg, const SatEnv& env, std::uint64_t seed);

// Deterministic evaluation seed for (replication, episode), shared by every
// arm of every experiment.
std::uint64_t eval_seed(std::uint64_t master, int replication, int episode);

// Training seed for (stream, sweep point, replication). Streams use fixed ids
// so adding one never changes another's draws; arms compared head to head
// share a stream.
std::uint64_t train_seed(std::uint64_t master, int stream_id, int point, int replication);

// Mean greedy episode score over the shared evaluation seeds of one
// replication.
double evaluate_policy(SatEnv& env, const MlpPolicy& policy, std::uint64_t master,
                       int replication, int episodes);

// Everything the evaluate subcommand needs, bundled by the train subcommand.
struct CheckpointBundle {
  RunConfig cfg;
  std::string algo;            // "grpo" or "ppo"
  std::uint64_t master_seed = 0;
  std::string trainer_state;   // trainer checkpoint (policy + optimizer)
  std::string policy_state;    // policy alone, enough to evaluate
};

std::string pack_checkpoint(const CheckpointBundle& bundle);

// @throws BadConfig on malformed text
CheckpointBundle unpack_checkpoint(const std::string& text);

struct TrainRun {
  CheckpointBundle bundle;
  std::vector<UpdateStats> stats;
};

/**
 * Train one policy on the configured scenario.
 * @param algo "grpo" or "ppo"
 * @throws BadConfig on an unknown algorithm name
 */
TrainRun run_training(const RunConfig& cfg, const std::string& algo, std::uint64_t seed);

// Mean greedy score of a bundled checkpoint over the first replication's
// evaluation seeds.
double evaluate_checkpoint(const CheckpointBundle& bundle, int episodes);

}  // namespace semsat
