#pragma once

#include <cstdint>
#include <vector>

#include "semsat/types.hpp"

namespace semsat {

// Minimal episodic interface between an environment and a trainer. One slot is
// decided through a sequence of categorical heads; the mask of a head may
// depend on values already chosen for earlier heads in the same slot, which is
// how joint feasibility constraints are enforced during sampling.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;

  virtual int state_dim() const = 0;
  virtual const std::vector<int>& head_dims() const = 0;

  virtual void reset(std::uint64_t seed) = 0;
  virtual bool done() const = 0;
  virtual VecX observe() const = 0;

  // Legal-value bitmask of head h, conditioned on heads 0..h-1 of this slot.
  virtual std::uint32_t head_mask(int head) const = 0;
  virtual void set_head(int head, int value) = 0;

  // Apply the assembled action, advance one slot, return the reward.
  virtual double commit_slot() = 0;
};

}  // namespace semsat
