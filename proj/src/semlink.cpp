#include "semsat/semlink.hpp"

#include <cmath>

namespace semsat {

void validate_choice(const ModeChoice& choice, const ModeProfile& profile) {
  if (choice.mode == Mode::TEXT_IMAGE) {
    if (choice.layer < 1 || choice.layer > 3) {
      throw InvalidChoice("TEXT_IMAGE layer must be 1..3");
    }
  } else if (choice.layer != 1) {
    throw InvalidChoice("layer is fixed at 1 outside TEXT_IMAGE");
  }
  if (choice.mode == Mode::BIT) {
    if (choice.denoise_steps != 0) {
      throw InvalidChoice("BIT carries no denoising steps");
    }
  } else {
    if (choice.denoise_steps < 1 || choice.denoise_steps > profile.max_steps) {
      throw InvalidChoice("semantic modes need 1..max_steps denoising steps");
    }
  }
}

double payload_bits(const ModeChoice& choice, const ModeProfile& profile) {
  validate_choice(choice, profile);
  switch (choice.mode) {
    case Mode::BIT:
      return profile.bit_payload_bits;
    case Mode::TEXT:
      return profile.text_payload_bits;
    case Mode::TEXT_IMAGE:
    default:
      return profile.ti_payload_bits[choice.layer - 1];
  }
}

double quality_db(const ModeChoice& choice, const ModeProfile& profile) {
  validate_choice(choice, profile);
  if (choice.mode == Mode::BIT) {
    return profile.bit_quality_db;
  }
  double floor = profile.text_floor_db;
  double ceiling = profile.text_ceiling_db;
  if (choice.mode == Mode::TEXT_IMAGE) {
    floor = profile.ti_floor_db[choice.layer - 1];
    ceiling = profile.ti_ceiling_db[choice.layer - 1];
  }
  const double rise = 1.0 - std::exp(-choice.denoise_steps / profile.tau_steps);
  return floor + (ceiling - floor) * rise;
}

ComputeCost compute_cost(const ModeChoice& choice, const ModeProfile& profile) {
  validate_choice(choice, profile);
  if (choice.mode == Mode::BIT) {
    return {0.0, 0.0};
  }
  return {profile.semantic_tx_gflop, choice.denoise_steps * profile.denoise_step_gflop};
}

double task_delay_s(double payload_bits, const std::vector<HopSpec>& hops, double tx_gflop,
                    double tx_throughput_gflops, double rx_gflop, double rx_throughput_gflops) {
  double d = 0.0;
  if (tx_gflop > 0.0) {
    if (tx_throughput_gflops <= 0.0) {
      throw ZeroRateHop("transmitter compute throughput must be positive");
    }
    d += tx_gflop / tx_throughput_gflops;
  }
  for (const HopSpec& hop : hops) {
    if (hop.rate_bps <= 0.0) {
      throw ZeroRateHop("hop rate must be positive");
    }
    d += payload_bits / hop.rate_bps + hop.prop_delay_s;
  }
  if (rx_gflop > 0.0) {
    if (rx_throughput_gflops <= 0.0) {
      throw ZeroRateHop("receiver compute throughput must be positive");
    }
    d += rx_gflop / rx_throughput_gflops;
  }
  return d;
}

void validate_weights(const SemWeights& w) {
  const bool in_range = w.theta_d >= 0.0 && w.theta_d <= 1.0 && w.theta_r >= 0.0 &&
                        w.theta_r <= 1.0 && w.theta_c >= 0.0 && w.theta_c <= 1.0;
  if (!in_range || std::abs(w.theta_d + w.theta_r + w.theta_c - 1.0) > 1e-9) {
    throw BadWeights("metric weights must lie on the probability simplex");
  }
}

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

SemTerms sem_terms(const TaskOutcome& outcome, const NormRefs& refs) {
  if (refs.d_max_s <= 0.0 || refs.f_ref_gflop <= 0.0 ||
      refs.theta_ref_db <= refs.theta_min_db) {
    throw BadConfig("degenerate metric normalization references");
  }
  SemTerms t;
  t.latency = clamp01((refs.d_max_s - outcome.delay_s) / refs.d_max_s);
  t.quality = clamp01((outcome.quality_db - refs.theta_min_db) /
                      (refs.theta_ref_db - refs.theta_min_db));
  t.compute = clamp01(outcome.compute_gflop / refs.f_ref_gflop);
  return t;
}

double sem_value(const TaskOutcome& outcome, const SemWeights& weights, const NormRefs& refs) {
  validate_weights(weights);
  const SemTerms t = sem_terms(outcome, refs);
  return weights.theta_d * t.latency + weights.theta_r * t.quality - weights.theta_c * t.compute;
}

}  // namespace semsat
