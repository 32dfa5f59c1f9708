#pragma once

#include <array>
#include <vector>

#include "semsat/errors.hpp"
#include "semsat/types.hpp"

namespace semsat {

// Transmission modes. BIT ships the compressed source file unchanged; TEXT
// sends a caption-level description; TEXT_IMAGE sends text plus a compressed
// latent image at one of three compression layers, reconstructed at the
// receiver by iterative denoising.
enum class Mode { BIT = 0, TEXT = 1, TEXT_IMAGE = 2 };

// A concrete per-task choice. layer is 1..3 for TEXT_IMAGE and fixed at 1
// otherwise; denoise_steps is 0 for BIT and >= 1 for the semantic modes.
struct ModeChoice {
  Mode mode = Mode::BIT;
  int layer = 1;
  int denoise_steps = 0;
};

// Surrogate cost/quality tables for the three modes. Quality follows a
// saturating curve floor + (ceiling - floor) (1 - exp(-steps/tau)); BIT has a
// fixed delivered quality and no compute cost. Layer index rises with
// compression: smaller payload, lower quality ceiling, higher floor.
struct ModeProfile {
  double bit_payload_bits = 3.5e6;  // source file after 8:1 compression
  double text_payload_bits = 8e3;
  std::array<double, 3> ti_payload_bits = {512e3, 256e3, 128e3};

  double bit_quality_db = 40.0;
  double text_floor_db = 10.0;
  double text_ceiling_db = 16.0;
  std::array<double, 3> ti_floor_db = {10.0, 12.0, 14.0};
  std::array<double, 3> ti_ceiling_db = {26.0, 23.0, 20.0};
  double tau_steps = 8.0;

  double semantic_tx_gflop = 810.0;     // extraction, once per task
  double denoise_step_gflop = 686.0;    // reconstruction, per denoising step
  int max_steps = 32;

  // largest representable compute cost, used to normalize the SEM term
  double reference_gflop() const { return semantic_tx_gflop + max_steps * denoise_step_gflop; }
};

// @throws InvalidChoice when mode/layer/steps fall outside the contract above
void validate_choice(const ModeChoice& choice, const ModeProfile& profile);

// Encoded payload size in bits for a choice.
double payload_bits(const ModeChoice& choice, const ModeProfile& profile);

// Delivered quality in dB for a choice.
double quality_db(const ModeChoice& choice, const ModeProfile& profile);

struct ComputeCost {
  double tx_gflop = 0.0;
  double rx_gflop = 0.0;
  double total() const { return tx_gflop + rx_gflop; }
};

// Transmitter-side and receiver-side compute for a choice.
ComputeCost compute_cost(const ModeChoice& choice, const ModeProfile& profile);

struct HopSpec {
  double rate_bps = 0.0;
  double prop_delay_s = 0.0;
};

/**
 * End-to-end delay of one task:
 *   tx_gflop/tx_rate + sum_hops (payload/rate + prop) + rx_gflop/rx_rate.
 * Compute throughputs are in GFLOP/s.
 * @throws ZeroRateHop when a hop rate or a needed throughput is not positive
 */
double task_delay_s(double payload_bits, const std::vector<HopSpec>& hops, double tx_gflop,
                    double tx_throughput_gflops, double rx_gflop, double rx_throughput_gflops);

// Weights of the efficiency metric; must lie on the probability simplex.
struct SemWeights {
  double theta_d = 1.0 / 3.0;
  double theta_r = 1.0 / 3.0;
  double theta_c = 1.0 / 3.0;
};

// @throws BadWeights unless all weights are in [0,1] and sum to 1 (1e-9)
void validate_weights(const SemWeights& w);

// Normalization references for the metric terms.
struct NormRefs {
  double d_max_s = 10.0;        // per-task delay bound
  double theta_min_db = 12.0;   // per-task quality floor
  double theta_ref_db = 40.0;   // quality scale ceiling (BIT quality)
  double f_ref_gflop = 22762.0; // compute scale (tx + max steps)
};

struct TaskOutcome {
  double delay_s = 0.0;
  double quality_db = 0.0;
  double compute_gflop = 0.0;
  bool completed = false;
};

// The three normalized metric terms, each clamped to [0, 1].
struct SemTerms {
  double latency = 0.0;
  double quality = 0.0;
  double compute = 0.0;
};

SemTerms sem_terms(const TaskOutcome& outcome, const NormRefs& refs);

/**
 * Semantic efficiency of one completed task:
 *   theta_d (Dmax - D)/Dmax + theta_r (q - qmin)/(qref - qmin) - theta_c F/Fref
 * with every normalized term clamped to [0, 1] before weighting.
 * @throws BadWeights on invalid weights, BadConfig on degenerate references
 */
double sem_value(const TaskOutcome& outcome, const SemWeights& weights, const NormRefs& refs);

}  // namespace semsat
