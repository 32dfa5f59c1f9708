#pragma once

#include "semsat/channel.hpp"
#include "semsat/geometry.hpp"
#include "semsat/semlink.hpp"

namespace semsat {

// Full description of one simulated deployment. Defaults model a constellation
// of five LEOs serving a 50 km service disc with two UAV relays. All gains
// and noise figures are stored linear; dB keys are converted when a config
// file is loaded.
struct ScenarioConfig {
  // population
  int num_leos = 5;
  int num_uavs = 2;
  int num_users = 5;
  int num_tasks = 100;
  int horizon_slots = 600;

  WorldConfig world;

  // placement
  double service_disc_radius_m = 50e3;
  double leo_spacing_min_m = 200e3;
  double leo_spacing_max_m = 600e3;
  int min_relay_users = 1;  // users reachable only through a UAV relay
  int max_relay_users = 2;

  // traffic (file transfers, Poisson arrivals)
  double arrival_rate_hz = 2.0;
  double data_bits = 28e6;  // source file size, 3.5 MB
  double d_max_min_s = 3.0;
  double d_max_max_s = 10.0;
  double theta_min_low_db = 12.0;
  double theta_min_high_db = 22.0;

  // radio
  double leo_tx_power_w = 1.0;
  double uav_tx_power_w = 0.35;
  double bandwidth_hz = 20e6;
  double noise_w = 1e-16;  // -130 dBm
  double antenna_gain = 15848.93192461113;  // 42 dB linear
  double wavelength_m = 0.015;
  double carrier_hz = 20e9;  // Doppler reference carrier
  FadingParams fading;
  IslParams isl;

  // compute
  double tx_throughput_gflops = 10000.0;  // encoder side, 10 TFLOP/s
  double rx_throughput_gflops = 5000.0;   // decoder side, 5 TFLOP/s

  ModeProfile modes;
  SemWeights weights;

  // step-count menu exposed to the policy; index 0 is the BIT-only "0 steps"
  std::vector<int> step_menu = {0, 1, 2, 4, 8, 16, 32};

  NormRefs norm_refs(double d_max_s, double theta_min_db) const {
    NormRefs r;
    r.d_max_s = d_max_s;
    r.theta_min_db = theta_min_db;
    r.theta_ref_db = modes.bit_quality_db;
    r.f_ref_gflop = modes.reference_gflop();
    return r;
  }
};

// @throws BadConfig when fields are inconsistent or out of range
void validate_scenario(const ScenarioConfig& cfg);

}  // namespace semsat
