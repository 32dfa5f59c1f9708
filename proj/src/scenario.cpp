#include "semsat/scenario.hpp"

#include <cmath>

namespace semsat {

namespace {

void require(bool ok, const char* what) {
  if (!ok) {
    throw BadConfig(what);
  }
}

}  // namespace

void validate_scenario(const ScenarioConfig& c) {
  require(c.num_leos >= 1 && c.num_uavs >= 1 && c.num_users >= 1 && c.num_tasks >= 1,
          "population counts must be positive");
  require(c.horizon_slots >= 1, "horizon must be at least one slot");
  require(c.world.earth_radius_m > 0 && c.world.leo_altitude_m > 0 && c.world.uav_altitude_m >= 0,
          "geometry lengths must be positive");
  require(c.world.slot_duration_s > 0, "slot duration must be positive");
  require(c.world.leo_speed_mps >= 0 && c.world.uav_max_speed_mps >= 0,
          "speeds must be nonnegative");
  require(c.world.min_elevation_deg > 0 && c.world.min_elevation_deg < 90,
          "elevation mask must lie in (0, 90)");
  require(c.service_disc_radius_m > 0, "service disc radius must be positive");
  require(c.leo_spacing_min_m > 0 && c.leo_spacing_max_m >= c.leo_spacing_min_m,
          "satellite spacing range is inverted");
  require(c.min_relay_users >= 0 && c.max_relay_users >= c.min_relay_users &&
              c.max_relay_users <= c.num_users,
          "relay user range is inconsistent with the population");
  require(c.arrival_rate_hz > 0, "arrival rate must be positive");
  require(c.data_bits > 0, "source size must be positive");
  require(c.d_max_min_s > 0 && c.d_max_max_s >= c.d_max_min_s, "delay bound range is inverted");
  require(c.theta_min_high_db >= c.theta_min_low_db, "quality floor range is inverted");
  require(c.leo_tx_power_w > 0 && c.uav_tx_power_w > 0, "transmit powers must be positive");
  require(c.bandwidth_hz > 0 && c.noise_w > 0, "bandwidth and noise must be positive");
  require(c.antenna_gain > 0 && c.wavelength_m > 0 && c.carrier_hz > 0,
          "radio parameters must be positive");
  require(c.fading.rician_kappa >= 0, "rician factor must be nonnegative");
  require(c.fading.los_exponent > 0 && c.fading.nlos_exponent > 0,
          "path loss exponents must be positive");
  require(c.isl.boltzmann_jpk > 0 && c.isl.noise_temperature_k > 0 && c.isl.bandwidth_hz > 0 &&
              c.isl.carrier_hz > 0 && c.isl.peak_gain > 0 && c.isl.light_speed_mps > 0,
          "isl parameters must be positive");
  require(c.tx_throughput_gflops > 0 && c.rx_throughput_gflops > 0,
          "compute throughputs must be positive");
  validate_weights(c.weights);

  const auto& p = c.modes;
  require(p.bit_payload_bits > 0 && p.text_payload_bits > 0, "payload sizes must be positive");
  require(p.tau_steps > 0, "quality time constant must be positive");
  require(p.max_steps >= 1, "max denoising steps must be at least 1");
  require(p.semantic_tx_gflop >= 0 && p.denoise_step_gflop >= 0, "compute costs are negative");
  require(p.text_ceiling_db > p.text_floor_db, "text quality ceiling below its floor");
  for (int j = 0; j < 3; ++j) {
    require(p.ti_payload_bits[j] > 0, "latent payload sizes must be positive");
    require(p.ti_ceiling_db[j] > p.ti_floor_db[j], "latent quality ceiling below its floor");
  }
  require(p.reference_gflop() > 0, "compute reference must be positive");

  require(!c.step_menu.empty() && c.step_menu.front() == 0, "step menu must start at 0");
  require(c.step_menu.size() <= 32, "step menu exceeds the head width");
  bool any_positive = false;
  for (std::size_t i = 1; i < c.step_menu.size(); ++i) {
    require(c.step_menu[i] > c.step_menu[i - 1], "step menu must be strictly increasing");
    require(c.step_menu[i] <= p.max_steps, "step menu exceeds max denoising steps");
    any_positive = true;
  }
  require(any_positive, "step menu needs at least one positive entry");

  require(2 + c.num_uavs + (c.num_leos - 1) <= 32, "route head exceeds 32 values");
}

}  // namespace semsat
