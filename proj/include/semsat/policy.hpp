#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsat/errors.hpp"
#include "semsat/rng.hpp"
#include "semsat/types.hpp"

namespace semsat {

// Additive logit bias applied to one output unit at initialization, e.g. to
// start UAV motion heads with a preference for hovering.
struct HeadBias {
  int head = 0;
  int value = 0;
  double logit = 0.0;
};

struct PolicyConfig {
  int state_dim = 0;
  std::vector<int> head_dims;
  std::vector<int> hidden = {64, 64};
  bool value_head = false;
  std::vector<HeadBias> init_bias;
};

/**
 * Log-probabilities of a categorical restricted to the set bits of mask;
 * masked entries get -infinity.
 * @throws FullyMaskedHead when no value inside the vector is legal
 */
VecX masked_log_probs(const VecX& logits, std::uint32_t mask);

// Draw one value from the masked categorical; optionally reports its log
// probability.
int sample_masked(const VecX& logits, std::uint32_t mask, RandomSource& rng,
                  double* logp_out = nullptr);

// Tanh multilayer perceptron with one shared trunk and a single linear output
// layer whose rows are sliced into the per-head logit blocks (plus one value
// row when value_head is set). Parameters live in one flat vector so the
// optimizer and checkpoints can treat the network as a plain array.
class MlpPolicy {
 public:
  MlpPolicy() = default;
  MlpPolicy(const PolicyConfig& cfg, RandomSource& rng);

  const PolicyConfig& config() const { return cfg_; }
  int param_count() const { return param_count_; }
  VecX& params() { return params_; }
  const VecX& params() const { return params_; }
  int num_heads() const { return static_cast<int>(cfg_.head_dims.size()); }
  int head_offset(int head) const { return head_off_[head]; }
  int output_dim() const { return output_dim_; }
  int value_row() const;  // throws unless the value head exists

  struct Cache {
    MatX input;              // state_dim x batch
    std::vector<MatX> act;   // post-tanh activations per hidden layer
    MatX out;                // output_dim x batch
  };

  // states are columns; fills cache.out with the linear head outputs
  void forward(const MatX& states, Cache& cache) const;

  // Backpropagate dL/d(out) through the cached forward pass, accumulating
  // into grad (laid out exactly like params()).
  void backward(const Cache& cache, const MatX& dout, VecX& grad) const;

  // single-state convenience: the full output column
  VecX logits_for(const VecX& state) const;
  double value_for(const VecX& state) const;

  // JSON text; doubles survive a round trip bit for bit
  std::string serialize() const;
  static MlpPolicy deserialize(const std::string& text);

 private:
  void build_layout();

  PolicyConfig cfg_;
  std::vector<int> layer_in_, layer_out_;
  std::vector<int> w_off_, b_off_;
  std::vector<int> head_off_;
  int output_dim_ = 0;
  int param_count_ = 0;
  VecX params_;
};

}  // namespace semsat
