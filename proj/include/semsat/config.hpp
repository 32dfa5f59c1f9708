#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsat/scenario.hpp"
#include "semsat/trainer.hpp"

namespace semsat {

// Experiment drivers and their sweep grids.
struct ExperimentSpec {
  std::vector<double> theta_d_values = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> power_values_w = {0.5, 1.0, 2.0, 4.0};
  int replications = 5;
  int eval_episodes = 8;
  double fixed_model_theta_d = 0.1;  // training point of the reused policy

  // reference link for the per-level metric breakdown
  double breakdown_rate_bps = 80e3;
  double breakdown_prop_distance_m = 750e3;
  double breakdown_d_max_s = 10.0;
  double breakdown_theta_min_db = 12.0;
};

// @throws BadConfig on empty grids or out-of-range values
void validate_experiment(const ExperimentSpec& spec);

// Everything one run needs: the simulated deployment, the trainer settings,
// and the experiment grids. motion_hover_bias seeds the UAV motion heads with
// a preference for standing still; it becomes a HeadBias set at trainer
// construction.
struct RunConfig {
  ScenarioConfig scenario;
  TrainConfig train;
  ExperimentSpec experiment;
  double motion_hover_bias = 1.5;
};

/**
 * Parse a sectioned key=value config file. Every key maps 1:1 to a RunConfig
 * field; unknown keys are rejected. Gains and noise levels may be given in
 * decibel form (antenna_gain_db, peak_gain_db, noise_dbm) and are converted
 * to linear on load.
 * @throws IoFailure when the file cannot be read, BadConfig on bad content
 */
RunConfig load_config(const std::string& path);

// Canonical linear-form text of a config; load(serialize(c)) == c exactly.
std::string serialize_config(const RunConfig& cfg);

RunConfig parse_config(const std::string& text);

// @throws IoFailure
void save_config(const RunConfig& cfg, const std::string& path);

// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);

// "%.17g" rendering used for all emitted numbers.
std::string format_double(double v);

}  // namespace semsat
