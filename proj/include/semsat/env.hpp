#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "semsat/channel.hpp"
#include "semsat/geometry.hpp"
#include "semsat/rng.hpp"
#include "semsat/rollout_env.hpp"
#include "semsat/scenario.hpp"
#include "semsat/semlink.hpp"
#include "semsat/types.hpp"

namespace semsat {

enum class TaskStatus { PENDING, IN_FLIGHT, DONE, FAILED };

enum class RouteKind { IDLE = 0, DIRECT = 1, VIA_UAV = 2, ISL = 3 };

struct RouteChoice {
  RouteKind kind = RouteKind::IDLE;
  int target = -1;  // UAV index for VIA_UAV, LEO index for ISL
};

enum class StageKind { TX_COMPUTE, SERIALIZE, PROP, RX_COMPUTE };

enum class LinkKind { LEO_USER, LEO_UAV, UAV_USER, ISL };

struct PipelineStage {
  StageKind kind;
  LinkKind link = LinkKind::LEO_USER;  // SERIALIZE / PROP only
  int src = -1;
  int dst = -1;
  double remaining = 0;  // gigaflop, bits, or seconds depending on kind
};

struct Task {
  int id = -1;
  int origin_leo = -1;
  int owner_leo = -1;
  int dest_user = -1;
  bool relay_required = false;
  double arrival_time_s = 0;
  int arrival_slot = 0;
  double deadline_s = 0;       // absolute time
  double theta_min_db = 0;
  TaskStatus status = TaskStatus::PENDING;
  bool plan_locked = false;    // mode fixed by an earlier relay hop
  bool registered = false;
  ModeChoice plan;
  std::vector<PipelineStage> pipeline;
  std::size_t stage = 0;
  // bookkeeping for the serving-side resources held by this task
  int hold_leo = -1;
  int hold_isl_peer = -1;
  int hold_uav = -1;
  int hold_user = -1;
  // outcome
  double finish_time_s = -1;
  double quality_db = 0;
  double compute_gflop = 0;
  double sem = 0;
};

enum class TaskEventKind { ARRIVED, STARTED, HANDOFF, COMPLETED, FAILED };

struct TaskEvent {
  int slot = 0;
  int task = -1;
  TaskEventKind kind = TaskEventKind::ARRIVED;
  double delay_s = 0;
  double quality_db = 0;
  double compute_gflop = 0;
  double sem = 0;
  std::string detail;
};

struct SlotChannels {
  // exact and outdated channels; satellite rows are receiver-indexed with
  // users first, then UAVs. The scheduler only ever observes the *_csi sets;
  // realized rates use the exact ones.
  std::vector<std::vector<Complex>> sat_exact;    // [leo][L+N]
  std::vector<std::vector<Complex>> sat_csi;      // [leo][L+N]
  std::vector<std::vector<Complex>> uav_user;     // [uav][user]
  std::vector<std::vector<Complex>> uav_user_csi; // [uav][user]
  std::vector<std::vector<double>> isl_rate_bps;  // [leo][leo], 0 on diagonal
};

struct EnvAction {
  std::vector<RouteChoice> route;      // per LEO
  std::vector<ModeChoice> mode;        // per LEO, ignored for IDLE routes
  std::vector<int> uav_motion;         // per UAV, 0 = hover, 1..8 = compass
};

struct ActionMask {
  std::vector<std::uint32_t> route;    // per LEO
  std::vector<std::uint32_t> mode;     // per LEO
  std::vector<std::uint32_t> layer;    // per LEO
  std::vector<std::uint32_t> steps;    // per LEO
  std::vector<std::uint32_t> motion;   // per UAV
};

struct StepResult {
  double reward = 0;
  bool done = false;
  std::vector<TaskEvent> events;
};

// Satellite-UAV-ground task environment. One step spans one slot: commit the
// per-LEO transmission plans and per-UAV displacements, advance every active
// pipeline by the slot duration, then move the constellation and redraw
// channels for the next slot.
class SatEnv : public RolloutEnv {
 public:
  explicit SatEnv(const ScenarioConfig& cfg);

  // RolloutEnv
  int state_dim() const override { return state_dim_; }
  const std::vector<int>& head_dims() const override { return head_dims_; }
  void reset(std::uint64_t seed) override;
  bool done() const override;
  VecX observe() const override;
  std::uint32_t head_mask(int head) const override;
  void set_head(int head, int value) override;
  double commit_slot() override;

  // Direct stepping for tests and scripted rollouts.
  StepResult step(const EnvAction& action);

  // State-only mask: value v of a head is set iff some fully legal joint
  // action assigns v to that head given current occupancy and coverage.
  ActionMask legal_action_mask() const;

  const ScenarioConfig& config() const { return cfg_; }
  const NetworkSnapshot& snapshot() const { return snap_; }
  const SlotChannels& channels() const { return chan_; }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::deque<int>& queue(int leo) const { return queues_[leo]; }
  const std::vector<TaskEvent>& event_log() const { return events_; }
  int slot() const { return snap_.slot; }
  int tasks_resolved() const { return resolved_; }

  // Head index ranges, exposed so a policy can bias specific heads.
  int motion_head_begin() const { return 4 * cfg_.num_leos; }
  int num_heads() const { return static_cast<int>(head_dims_.size()); }

  // Ablation switches: freeze UAVs at their positions, or make a single
  // transmission mode the only one available (layers and steps stay free).
  void force_hover(bool on) { force_hover_ = on; }
  void force_mode(std::optional<Mode> mode) { forced_mode_ = mode; }

  double rate_bps(LinkKind link, int src, int dst) const;
  double prop_delay_s(LinkKind link, int src, int dst) const;

 private:
  void place_nodes();
  void draw_arrivals();
  void register_arrivals();
  void resample_channels();
  void start_plan(int leo, const RouteChoice& route, const ModeChoice& mode,
                  std::vector<TaskEvent>& ev);
  void progress_pipelines(std::vector<TaskEvent>& ev, double& reward);
  void finish_task(Task& t, bool completed, double time_s,
                   std::vector<TaskEvent>& ev, double& reward);
  void release_task_resources(Task& t);
  void fail_unresolved_at_horizon(std::vector<TaskEvent>& ev);

  // resources claimed by plans earlier in the same slot
  struct Claims {
    std::vector<char> user, uav, isl;
  };
  Claims empty_claims() const;
  Claims claims_from_heads(int upto_leo) const;
  void claim_route(int leo, const RouteChoice& r, Claims& c) const;
  std::uint32_t route_mask_for(int leo, const Claims* claims) const;
  std::uint32_t mode_mask_for(int leo, const RouteChoice& route) const;
  std::uint32_t layer_mask_for(int leo, const RouteChoice& route,
                               Mode mode) const;
  std::uint32_t steps_mask_for(int leo, const RouteChoice& route,
                               Mode mode) const;
  bool leo_can_deliver(int leo, const Task& t) const;
  int menu_index(int steps) const;
  RouteChoice decode_route(int leo, int value) const;
  int encode_route(int leo, const RouteChoice& r) const;
  const Task* head_task(int leo) const;

  ScenarioConfig cfg_;
  int state_dim_ = 0;
  std::vector<int> head_dims_;

  NetworkSnapshot snap_;
  SlotChannels chan_;
  std::vector<double> leo_phase_rad_;
  std::vector<char> user_relay_only_;
  std::vector<Task> tasks_;
  std::vector<std::deque<int>> queues_;
  std::vector<TaskEvent> events_;

  // occupancy: id of the holding task or -1
  std::vector<int> leo_tx_busy_;
  std::vector<int> leo_isl_busy_;
  std::vector<int> uav_busy_;
  std::vector<int> user_busy_;

  RandomSource placement_rng_;
  RandomSource arrivals_rng_;
  RandomSource channel_rng_;
  RandomSource csi_rng_;

  int resolved_ = 0;
  bool done_ = false;
  bool force_hover_ = false;
  std::optional<Mode> forced_mode_;

  // per-slot head assembly state
  std::vector<int> head_values_;
  std::vector<bool> head_set_;
};

// Uniform-rate arrival instants: K exponential gaps at the given rate.
std::vector<double> draw_arrival_times(int count, double rate_hz,
                                       RandomSource& rng);

const char* to_string(TaskEventKind k);
const char* to_string(TaskStatus s);

}  // namespace semsat
