#include "semsat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace semsat {

double Trajectory::total_return() const {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

VecX group_advantage(const std::vector<double>& returns) {
  const int n = static_cast<int>(returns.size());
  if (n < 2) {
    throw GroupTooSmall("group advantage needs at least two returns");
  }
  const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : returns) {
    var += (r - mean) * (r - mean);
  }
  const double sd = std::sqrt(var / (n - 1));
  VecX adv = VecX::Zero(n);
  if (sd < 1e-8) {
    return adv;
  }
  for (int i = 0; i < n; ++i) {
    adv[i] = (returns[i] - mean) / sd;
  }
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clamped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clamped * advantage);
}

void adam_step(VecX& params, const VecX& grad, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != grad.size()) {
    state.m = VecX::Zero(grad.size());
    state.v = VecX::Zero(grad.size());
    state.t = 0;
  }
  ++state.t;
  state.m = beta1 * state.m + (1.0 - beta1) * grad;
  state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, state.t);
  const double bc2 = 1.0 - std::pow(beta2, state.t);
  params.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

Trajectory collect_episode(RolloutEnv& env, const MlpPolicy& policy, std::uint64_t env_seed,
                           RandomSource& policy_rng) {
  env.reset(env_seed);
  Trajectory tr;
  const auto& dims = env.head_dims();
  const int heads = static_cast<int>(dims.size());
  while (!env.done()) {
    VecX state = env.observe();
    const VecX out = policy.logits_for(state);
    std::vector<int> actions(heads);
    std::vector<std::uint32_t> masks(heads);
    double joint = 0.0;
    for (int h = 0; h < heads; ++h) {
      const std::uint32_t mask = env.head_mask(h);
      double lp = 0.0;
      const int a =
          sample_masked(out.segment(policy.head_offset(h), dims[h]), mask, policy_rng, &lp);
      env.set_head(h, a);
      actions[h] = a;
      masks[h] = mask;
      joint += lp;
    }
    const double reward = env.commit_slot();
    tr.states.push_back(std::move(state));
    tr.actions.push_back(std::move(actions));
    tr.masks.push_back(std::move(masks));
    tr.old_logp.push_back(joint);
    tr.rewards.push_back(reward);
  }
  return tr;
}

double evaluate_episode(RolloutEnv& env, const MlpPolicy& policy, std::uint64_t env_seed) {
  env.reset(env_seed);
  const auto& dims = env.head_dims();
  double total = 0.0;
  while (!env.done()) {
    const VecX out = policy.logits_for(env.observe());
    for (std::size_t h = 0; h < dims.size(); ++h) {
      const std::uint32_t mask = env.head_mask(static_cast<int>(h));
      const VecX lp = masked_log_probs(out.segment(policy.head_offset(h), dims[h]), mask);
      int best = -1;
      for (int i = 0; i < dims[h]; ++i) {
        if (((mask >> i) & 1u) != 0u && (best < 0 || lp[i] > lp[best])) {
          best = i;
        }
      }
      env.set_head(static_cast<int>(h), best);
    }
    total += env.commit_slot();
  }
  return total;
}

namespace {

struct FlatBatch {
  MatX states;
  std::vector<const Trajectory*> traj;
  std::vector<int> step;
  std::vector<double> weight;   // per-column policy loss weight, sums to 1
  std::vector<double> adv;
  std::vector<double> vtarget;  // critic regression target, critic runs only
  int total = 0;
};

FlatBatch flatten(const std::vector<Trajectory>& group, const std::vector<VecX>& adv_per_step,
                  const std::vector<VecX>* vtargets, bool per_episode_mean) {
  FlatBatch fb;
  int total = 0;
  for (const Trajectory& tr : group) {
    total += static_cast<int>(tr.states.size());
  }
  fb.total = total;
  if (total == 0) {
    return fb;
  }
  fb.states.resize(group[0].states[0].size(), total);
  fb.traj.reserve(total);
  int col = 0;
  const double g = static_cast<double>(group.size());
  for (std::size_t e = 0; e < group.size(); ++e) {
    const Trajectory& tr = group[e];
    const int steps = static_cast<int>(tr.states.size());
    const double w = per_episode_mean ? 1.0 / (g * steps) : 1.0 / total;
    for (int s = 0; s < steps; ++s) {
      fb.states.col(col) = tr.states[s];
      fb.traj.push_back(&tr);
      fb.step.push_back(s);
      fb.weight.push_back(w);
      fb.adv.push_back(adv_per_step[e][s]);
      fb.vtarget.push_back(vtargets != nullptr ? (*vtargets)[e][s] : 0.0);
      ++col;
    }
  }
  return fb;
}

struct EpochResult {
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double kl = 0;
  double grad_norm = 0;
};

EpochResult batch_loss_grad(const MlpPolicy& policy, const FlatBatch& fb, const TrainConfig& cfg,
                            bool with_value, bool check_stale, VecX& grad) {
  MlpPolicy::Cache cache;
  policy.forward(fb.states, cache);
  const int heads = policy.num_heads();

  // new joint log probabilities, and the stale-batch guard
  std::vector<double> new_lp(fb.total, 0.0);
  std::vector<std::vector<VecX>> lps(fb.total, std::vector<VecX>(heads));
  for (int t = 0; t < fb.total; ++t) {
    const Trajectory& tr = *fb.traj[t];
    const int s = fb.step[t];
    for (int h = 0; h < heads; ++h) {
      const int dim = policy.config().head_dims[h];
      lps[t][h] = masked_log_probs(cache.out.col(t).segment(policy.head_offset(h), dim),
                                   tr.masks[s][h]);
      new_lp[t] += lps[t][h][tr.actions[s][h]];
    }
    if (check_stale && std::abs(new_lp[t] - tr.old_logp[s]) > 1e-6) {
      throw StaleTrajectories("batch was collected under different parameters");
    }
  }

  MatX dout = MatX::Zero(policy.output_dim(), fb.total);
  EpochResult res;
  for (int t = 0; t < fb.total; ++t) {
    const Trajectory& tr = *fb.traj[t];
    const int s = fb.step[t];
    const double a_t = fb.adv[t];
    const double w = fb.weight[t];
    const double ratio = std::exp(new_lp[t] - tr.old_logp[s]);
    res.policy_loss -= clipped_surrogate(ratio, a_t, cfg.clip) * w;
    if (cfg.kl_penalty) {
      res.kl += (tr.old_logp[s] - new_lp[t]) * w;
    }
    const bool active = (a_t >= 0.0 && ratio <= 1.0 + cfg.clip) ||
                        (a_t < 0.0 && ratio >= 1.0 - cfg.clip);
    const double gcoef = active ? a_t * ratio : 0.0;
    for (int h = 0; h < heads; ++h) {
      const int dim = policy.config().head_dims[h];
      const int off = policy.head_offset(h);
      const VecX& lp = lps[t][h];
      const int act = tr.actions[s][h];
      const std::uint32_t mask = tr.masks[s][h];
      double ent = 0.0;
      for (int i = 0; i < dim; ++i) {
        if (((mask >> i) & 1u) != 0u) {
          ent -= std::exp(lp[i]) * lp[i];
        }
      }
      res.entropy += ent * w;
      for (int i = 0; i < dim; ++i) {
        if (((mask >> i) & 1u) == 0u) {
          continue;
        }
        const double p = std::exp(lp[i]);
        const double onehot = i == act ? 1.0 : 0.0;
        double g = -gcoef * (onehot - p);
        g += cfg.entropy_coeff * p * (lp[i] + ent);
        if (cfg.kl_penalty) {
          g -= cfg.kl_coeff * (onehot - p);  // sampled forward-KL estimator
        }
        dout(off + i, t) += w * g;
      }
    }
    if (with_value) {
      const int vr = policy.value_row();
      const double err = cache.out(vr, t) - fb.vtarget[t];
      res.value_loss += 0.5 * err * err / fb.total;
      dout(vr, t) += cfg.value_coeff * err / fb.total;
    }
  }
  policy.backward(cache, dout, grad);
  res.grad_norm = grad.norm();
  return res;
}

EpochResult batch_epoch(MlpPolicy& policy, const FlatBatch& fb, const TrainConfig& cfg,
                        bool with_value, bool check_stale, AdamState& adam) {
  VecX grad = VecX::Zero(policy.param_count());
  const EpochResult res = batch_loss_grad(policy, fb, cfg, with_value, check_stale, grad);
  adam_step(policy.params(), grad, adam, cfg.lr);
  return res;
}

UpdateStats optimize(MlpPolicy& policy, const FlatBatch& fb, const TrainConfig& cfg,
                     bool with_value, AdamState& adam) {
  UpdateStats st;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const EpochResult er = batch_epoch(policy, fb, cfg, with_value, epoch == 0, adam);
    st.policy_loss = er.policy_loss;
    st.value_loss = er.value_loss;
    st.entropy = er.entropy;
    st.grad_norm = er.grad_norm;
  }
  return st;
}

std::string trainer_checkpoint(const char* algo, const MlpPolicy& policy, const AdamState& adam,
                               int update_idx) {
  nlohmann::json j;
  j["algo"] = algo;
  j["update"] = update_idx;
  j["policy"] = nlohmann::json::parse(policy.serialize());
  j["adam_t"] = adam.t;
  j["adam_m"] = std::vector<double>(adam.m.data(), adam.m.data() + adam.m.size());
  j["adam_v"] = std::vector<double>(adam.v.data(), adam.v.data() + adam.v.size());
  return j.dump();
}

void trainer_restore(const std::string& text, const char* algo, MlpPolicy& policy,
                     AdamState& adam, int& update_idx) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("algo").get<std::string>() != algo) {
    throw BadConfig("checkpoint was written by a different algorithm");
  }
  policy = MlpPolicy::deserialize(j.at("policy").dump());
  update_idx = j.at("update").get<int>();
  adam.t = j.at("adam_t").get<int>();
  const auto m = j.at("adam_m").get<std::vector<double>>();
  const auto v = j.at("adam_v").get<std::vector<double>>();
  if (m.size() != v.size() || static_cast<int>(m.size()) != policy.param_count()) {
    throw BadConfig("checkpoint optimizer state does not match the policy");
  }
  adam.m = Eigen::Map<const VecX>(m.data(), m.size());
  adam.v = Eigen::Map<const VecX>(v.data(), v.size());
}

MlpPolicy make_policy(const RolloutEnv& env, const TrainConfig& cfg, bool value_head) {
  PolicyConfig pc;
  pc.state_dim = env.state_dim();
  pc.head_dims = env.head_dims();
  pc.hidden = cfg.hidden;
  pc.value_head = value_head;
  pc.init_bias = cfg.init_bias;
  RandomSource rng(derive_seed(cfg.seed, stream::kInit));
  return MlpPolicy(pc, rng);
}

}  // namespace

UpdateStats grpo_optimize(MlpPolicy& policy, const std::vector<Trajectory>& group,
                          const VecX& advantages, const TrainConfig& cfg, AdamState& adam) {
  if (static_cast<int>(group.size()) != advantages.size()) {
    throw GroupTooSmall("one advantage per episode is required");
  }
  std::vector<VecX> adv_per_step(group.size());
  for (std::size_t e = 0; e < group.size(); ++e) {
    adv_per_step[e] = VecX::Constant(static_cast<int>(group[e].states.size()), advantages[e]);
  }
  const FlatBatch fb = flatten(group, adv_per_step, nullptr, true);
  return optimize(policy, fb, cfg, false, adam);
}

double surrogate_loss(const MlpPolicy& policy, const std::vector<Trajectory>& group,
                      const VecX& advantages, const TrainConfig& cfg, VecX* grad) {
  if (static_cast<int>(group.size()) != advantages.size()) {
    throw GroupTooSmall("one advantage per episode is required");
  }
  std::vector<VecX> adv_per_step(group.size());
  for (std::size_t e = 0; e < group.size(); ++e) {
    adv_per_step[e] = VecX::Constant(static_cast<int>(group[e].states.size()), advantages[e]);
  }
  const FlatBatch fb = flatten(group, adv_per_step, nullptr, true);
  VecX g = VecX::Zero(policy.param_count());
  const EpochResult res = batch_loss_grad(policy, fb, cfg, false, false, g);
  if (grad != nullptr) {
    *grad = g;
  }
  // entropy enters the optimized objective with its bonus sign flipped
  return res.policy_loss - cfg.entropy_coeff * res.entropy + cfg.kl_coeff * res.kl;
}

GrpoTrainer::GrpoTrainer(RolloutEnv& env, const TrainConfig& cfg)
    : env_(env), cfg_(cfg), policy_(make_policy(env, cfg, false)) {
  if (cfg_.group_size < 2) {
    throw GroupTooSmall("group size must be at least two");
  }
}

UpdateStats GrpoTrainer::update() {
  // every member of the group replays the same environment draw
  const std::uint64_t env_seed = derive_seed(cfg_.seed, stream::kEpisode, update_idx_);
  std::vector<Trajectory> group;
  group.reserve(cfg_.group_size);
  for (int e = 0; e < cfg_.group_size; ++e) {
    RandomSource prng(derive_seed(cfg_.seed, stream::kPolicy, update_idx_, e));
    group.push_back(collect_episode(env_, policy_, env_seed, prng));
  }
  std::vector<double> returns;
  returns.reserve(group.size());
  for (const Trajectory& tr : group) {
    returns.push_back(tr.total_return());
  }
  UpdateStats st = grpo_optimize(policy_, group, group_advantage(returns), cfg_, adam_);
  st.update = update_idx_;
  st.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();
  st.best_return = *std::max_element(returns.begin(), returns.end());
  ++update_idx_;
  return st;
}

std::vector<UpdateStats> GrpoTrainer::run(int updates) {
  std::vector<UpdateStats> log;
  log.reserve(updates);
  for (int i = 0; i < updates; ++i) {
    log.push_back(update());
  }
  return log;
}

std::string GrpoTrainer::checkpoint() const {
  return trainer_checkpoint("grpo", policy_, adam_, update_idx_);
}

void GrpoTrainer::restore(const std::string& text) {
  trainer_restore(text, "grpo", policy_, adam_, update_idx_);
}

PpoTrainer::PpoTrainer(RolloutEnv& env, const TrainConfig& cfg)
    : env_(env), cfg_(cfg), policy_(make_policy(env, cfg, true)) {
  if (cfg_.group_size < 1) {
    throw GroupTooSmall("batch needs at least one episode");
  }
}

UpdateStats PpoTrainer::update() {
  std::vector<Trajectory> group;
  group.reserve(cfg_.group_size);
  for (int e = 0; e < cfg_.group_size; ++e) {
    const std::uint64_t env_seed = derive_seed(cfg_.seed, stream::kEpisode, update_idx_, e);
    RandomSource prng(derive_seed(cfg_.seed, stream::kPolicy, update_idx_, e));
    group.push_back(collect_episode(env_, policy_, env_seed, prng));
  }
  // reward-to-go targets and critic-baselined advantages
  std::vector<VecX> vtargets(group.size());
  std::vector<VecX> adv(group.size());
  double adv_mean = 0.0;
  int total = 0;
  for (std::size_t e = 0; e < group.size(); ++e) {
    const Trajectory& tr = group[e];
    const int steps = static_cast<int>(tr.states.size());
    vtargets[e] = VecX::Zero(steps);
    adv[e] = VecX::Zero(steps);
    double run = 0.0;
    for (int s = steps - 1; s >= 0; --s) {
      run += tr.rewards[s];
      vtargets[e][s] = run;
    }
    for (int s = 0; s < steps; ++s) {
      adv[e][s] = vtargets[e][s] - policy_.value_for(tr.states[s]);
      adv_mean += adv[e][s];
      ++total;
    }
  }
  adv_mean /= std::max(total, 1);
  double adv_var = 0.0;
  for (const VecX& a : adv) {
    adv_var += (a.array() - adv_mean).square().sum();
  }
  const double adv_sd = std::sqrt(adv_var / std::max(total - 1, 1));
  for (VecX& a : adv) {
    a.array() -= adv_mean;
    if (adv_sd >= 1e-8) {
      a /= adv_sd;
    }
  }
  const FlatBatch fb = flatten(group, adv, &vtargets, false);
  UpdateStats st = optimize(policy_, fb, cfg_, true, adam_);
  st.update = update_idx_;
  double mean = 0.0, best = -1e300;
  for (const Trajectory& tr : group) {
    const double r = tr.total_return();
    mean += r;
    best = std::max(best, r);
  }
  st.mean_return = mean / group.size();
  st.best_return = best;
  ++update_idx_;
  return st;
}

std::vector<UpdateStats> PpoTrainer::run(int updates) {
  std::vector<UpdateStats> log;
  log.reserve(updates);
  for (int i = 0; i < updates; ++i) {
    log.push_back(update());
  }
  return log;
}

std::string PpoTrainer::checkpoint() const {
  return trainer_checkpoint("ppo", policy_, adam_, update_idx_);
}

void PpoTrainer::restore(const std::string& text) {
  trainer_restore(text, "ppo", policy_, adam_, update_idx_);
}

}  // namespace semsat
