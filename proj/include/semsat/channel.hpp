#pragma once

#include "semsat/errors.hpp"
#include "semsat/rng.hpp"
#include "semsat/types.hpp"

namespace semsat {

using ChannelRealization = Complex;

// Rician air-to-ground fading with distinct line-of-sight / non-line-of-sight
// path loss exponents. kappa may be +inf for a pure line-of-sight channel.
struct FadingParams {
  double rician_kappa = 10.0;
  double los_exponent = 2.2;    // alpha_L
  double nlos_exponent = 2.5;   // alpha_N
  double los_phase_rad = 0.0;   // phase of the deterministic component
};

// Free-space satellite downlink. correlation is the outdated-CSI coefficient
// xi = J0(2 pi doppler delay) for the link.
struct SatLinkParams {
  double antenna_gain = 15848.93192461113;  // 42 dB, linear power gain
  double wavelength_m = 0.015;
  double phase_rad = 0.0;
  double correlation = 1.0;
};

// Inter-satellite link noise model: thermal noise eps*rho*B with free-space
// path loss at the ISL carrier.
struct IslParams {
  double boltzmann_jpk = 1.380649e-23;  // eps
  double noise_temperature_k = 354.81;  // rho
  double bandwidth_hz = 20e6;
  double carrier_hz = 25e9;
  double peak_gain = 15848.93192461113;  // |delta_max|^2 = 42 dB linear
  double light_speed_mps = 299792458.0;
};

/**
 * Bessel function of the first kind, order zero. Ascending power series for
 * small arguments, Hankel asymptotic expansion for large ones. Absolute error
 * below 1e-10 on [0, 20].
 */
double bessel_j0(double x);

// Outdated-CSI correlation xi = J0(2 pi doppler delay).
double csi_correlation(double doppler_hz, double delay_s);

/**
 * Draw one Rician fading realization at the given distance:
 *   h = sqrt(k/(k+1)) Hbar d^(-aL/2) + sqrt(1/(k+1)) Hhat d^(-aN/2)
 * with |Hbar| = 1 and Hhat circularly symmetric unit-variance Gaussian.
 * @throws NonPositiveDistance for d <= 0
 */
ChannelRealization sample_uav_user_channel(double distance_m, const FadingParams& params,
                                           RandomSource& rng);

/**
 * Deterministic free-space channel h = sqrt(beta) lambda / (4 pi d) e^{j gamma}.
 * @throws NonPositiveDistance for d <= 0
 */
ChannelRealization sat_channel(double distance_m, const SatLinkParams& params);

/**
 * Outdated channel estimate hbar = xi h + sqrt(1 - xi^2) e, where e is
 * circularly symmetric Gaussian with variance |h|^2. Preserves the second
 * moment: E|hbar|^2 = |h|^2.
 */
ChannelRealization apply_outdated_csi(ChannelRealization exact, const SatLinkParams& params,
                                      RandomSource& rng);

// Shannon capacity B log2(1 + P |h|^2 / sigma^2) in bit/s.
double capacity_bps(ChannelRealization h, double tx_power_w, double bandwidth_hz,
                    double noise_w);

// Inter-satellite capacity B log2(1 + P g / (eps rho B (4 pi d f / c)^2)).
double isl_capacity_bps(double distance_m, double tx_power_w, const IslParams& params);

}  // namespace semsat
