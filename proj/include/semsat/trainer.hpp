#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semsat/policy.hpp"
#include "semsat/rng.hpp"
#include "semsat/rollout_env.hpp"
#include "semsat/types.hpp"

namespace semsat {

struct Trajectory {
  std::vector<VecX> states;
  std::vector<std::vector<int>> actions;           // per step, per head
  std::vector<std::vector<std::uint32_t>> masks;   // per step, per head
  std::vector<double> old_logp;                    // joint log prob per step
  std::vector<double> rewards;
  double total_return() const;
};

/**
 * Group-relative advantages: (R_i - mean) / sample standard deviation.
 * Returns all zeros when the spread is below 1e-8.
 * @throws GroupTooSmall for fewer than two returns
 */
VecX group_advantage(const std::vector<double>& returns);

// min(ratio * adv, clamp(ratio, 1-clip, 1+clip) * adv)
double clipped_surrogate(double ratio, double advantage, double clip);

struct AdamState {
  VecX m, v;
  int t = 0;
};

void adam_step(VecX& params, const VecX& grad, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  int updates = 150;
  int group_size = 8;
  int epochs = 4;           // optimization passes per collected batch
  double lr = 3e-4;
  double clip = 0.2;
  double entropy_coeff = 0.01;
  bool kl_penalty = false;  // optional penalty against the collection policy
  double kl_coeff = 0.0;
  double value_coeff = 0.5; // critic regression weight (critic-based only)
  std::vector<int> hidden = {64, 64};
  std::vector<HeadBias> init_bias;
  std::uint64_t seed = 1;
};

struct UpdateStats {
  int update = 0;
  double mean_return = 0;
  double best_return = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double grad_norm = 0;
};

// Run one episode with the given policy, sampling every head under the
// environment's conditional masks.
Trajectory collect_episode(RolloutEnv& env, const MlpPolicy& policy, std::uint64_t env_seed,
                           RandomSource& policy_rng);

// Deterministic evaluation companion: same loop but picking the most likely
// legal value of every head. Returns the episode return.
double evaluate_episode(RolloutEnv& env, const MlpPolicy& policy, std::uint64_t env_seed);

/**
 * One optimization cycle (cfg.epochs clipped-surrogate passes) over an
 * externally collected group, with one shared advantage per episode and the
 * per-episode timestep-mean weighting. The first pass verifies the policy
 * still reproduces the collection-time log probabilities to 1e-6.
 * @throws StaleTrajectories when it does not
 */
UpdateStats grpo_optimize(MlpPolicy& policy, const std::vector<Trajectory>& group,
                          const VecX& advantages, const TrainConfig& cfg, AdamState& adam);

/**
 * The optimized objective (clipped surrogate plus entropy bonus and optional
 * KL penalty) at the policy's current parameters, without stepping. When grad
 * is non-null it receives the analytic parameter gradient, which makes the
 * implementation checkable against finite differences.
 */
double surrogate_loss(const MlpPolicy& policy, const std::vector<Trajectory>& group,
                      const VecX& advantages, const TrainConfig& cfg, VecX* grad = nullptr);

/**
 * Group-relative policy optimization. Each update collects a group of
 * episodes that share one environment seed, scores them against the group
 * mean, and takes clipped-surrogate steps. There is deliberately no critic:
 * the group baseline replaces it.
 * @throws StaleTrajectories when parameters moved between collection and
 *         optimization of the same batch
 */
class GrpoTrainer {
 public:
  GrpoTrainer(RolloutEnv& env, const TrainConfig& cfg);

  UpdateStats update();
  std::vector<UpdateStats> run(int updates);

  MlpPolicy& policy() { return policy_; }
  const MlpPolicy& policy() const { return policy_; }
  const TrainConfig& config() const { return cfg_; }
  bool has_value_net() const { return false; }
  int update_index() const { return update_idx_; }

  std::string checkpoint() const;
  void restore(const std::string& text);

 private:
  RolloutEnv& env_;
  TrainConfig cfg_;
  MlpPolicy policy_;
  AdamState adam_;
  int update_idx_ = 0;
};

// Clipped-surrogate actor-critic baseline: one value row shares the trunk,
// advantages are reward-to-go minus the critic's prediction.
class PpoTrainer {
 public:
  PpoTrainer(RolloutEnv& env, const TrainConfig& cfg);

  UpdateStats update();
  std::vector<UpdateStats> run(int updates);

  MlpPolicy& policy() { return policy_; }
  const MlpPolicy& policy() const { return policy_; }
  const TrainConfig& config() const { return cfg_; }
  bool has_value_net() const { return true; }
  int update_index() const { return update_idx_; }

  std::string checkpoint() const;
  void restore(const std::string& text);

 private:
  RolloutEnv& env_;
  TrainConfig cfg_;
  MlpPolicy policy_;
  AdamState adam_;
  int update_idx_ = 0;
};

}  // namespace semsat
