#include "semsat/channel.hpp"

#include <cmath>

namespace semsat {

namespace {

// Ascending series sum_k (-1)^k (x^2/4)^k / (k!)^2. Cancellation stays below
// the 1e-10 budget for x < 12.
double j0_series(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 80; ++k) {
    term *= -q / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) + 1e-300) {
      break;
    }
  }
  return sum;
}

// Hankel expansion J0(x) ~ sqrt(2/(pi x)) sum_k b_k x^-k cos(chi - k pi/2),
// chi = x - pi/4, b_k = prod_j (2j-1)^2 / (8j). Terms are added until they
// stop shrinking (optimal truncation).
double j0_asymptotic(double x) {
  const double chi = x - 0.25 * M_PI;
  const double c = std::cos(chi);
  const double s = std::sin(chi);
  // cos(chi - k pi/2) cycles through {c, s, -c, -s}
  const double phase[4] = {c, s, -c, -s};
  double b = 1.0;
  double sum = phase[0];
  double prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double f = (2.0 * k - 1.0);
    b *= f * f / (8.0 * k * x);
    if (b >= prev) {
      break;
    }
    prev = b;
    sum += b * phase[k % 4];
    if (b < 1e-18) {
      break;
    }
  }
  return std::sqrt(2.0 / (M_PI * x)) * sum;
}

}  // namespace

double bessel_j0(double x) {
  x = std::abs(x);
  if (x < 12.0) {
    return j0_series(x);
  }
  return j0_asymptotic(x);
}

double csi_correlation(double doppler_hz, double delay_s) {
  return bessel_j0(2.0 * M_PI * doppler_hz * delay_s);
}

ChannelRealization sample_uav_user_channel(double distance_m, const FadingParams& params,
                                           RandomSource& rng) {
  if (distance_m <= 0.0) {
    throw NonPositiveDistance("fading channel needs a positive distance");
  }
  const Complex los = std::polar(1.0, params.los_phase_rad);
  const double k = params.rician_kappa;
  if (std::isinf(k)) {
    return los * std::pow(distance_m, -0.5 * params.los_exponent);
  }
  const Complex scatter = rng.cgauss_unit();
  const double w_los = std::sqrt(k / (k + 1.0));
  const double w_nlos = std::sqrt(1.0 / (k + 1.0));
  return w_los * los * std::pow(distance_m, -0.5 * params.los_exponent) +
         w_nlos * scatter * std::pow(distance_m, -0.5 * params.nlos_exponent);
}

ChannelRealization sat_channel(double distance_m, const SatLinkParams& params) {
  if (distance_m <= 0.0) {
    throw NonPositiveDistance("satellite channel needs a positive distance");
  }
  const double mag = std::sqrt(params.antenna_gain) * params.wavelength_m /
                     (4.0 * M_PI * distance_m);
  return std::polar(mag, params.phase_rad);
}

ChannelRealization apply_outdated_csi(ChannelRealization exact, const SatLinkParams& params,
                                      RandomSource& rng) {
  const double xi = params.correlation;
  const double resid = 1.0 - xi * xi;
  // Always consume one draw so the stream position is independent of xi.
  const Complex err = std::abs(exact) * rng.cgauss_unit();
  if (resid <= 0.0) {
    return exact;
  }
  return xi * exact + std::sqrt(resid) * err;
}

double capacity_bps(ChannelRealization h, double tx_power_w, double bandwidth_hz,
                    double noise_w) {
  const double snr = tx_power_w * std::norm(h) / noise_w;
  return bandwidth_hz * std::log2(1.0 + snr);
}

double isl_capacity_bps(double distance_m, double tx_power_w, const IslParams& params) {
  if (distance_m <= 0.0) {
    throw NonPositiveDistance("inter-satellite link needs a positive distance");
  }
  const double spreading = 4.0 * M_PI * distance_m * params.carrier_hz / params.light_speed_mps;
  const double noise = params.boltzmann_jpk * params.noise_temperature_k * params.bandwidth_hz *
                       spreading * spreading;
  return params.bandwidth_hz * std::log2(1.0 + tx_power_w * params.peak_gain / noise);
}

}  // namespace semsat
