#include "semsat/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace semsat {

namespace {

constexpr double kDoneEps = 1e-9;

Vec3 rodrigues(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c));
}

// motion head values: 0 = hover, then 8 compass directions counterclockwise
// from east
Vec3 motion_direction(int value) {
  if (value == 0) {
    return Vec3::Zero();
  }
  const double a = (value - 1) * (M_PI / 4.0);
  return Vec3(std::cos(a), std::sin(a), 0.0);
}

std::string route_detail(const RouteChoice& r) {
  char buf[32];
  switch (r.kind) {
    case RouteKind::IDLE:
      return "idle";
    case RouteKind::DIRECT:
      return "direct";
    case RouteKind::VIA_UAV:
      std::snprintf(buf, sizeof buf, "uav %d", r.target);
      return buf;
    case RouteKind::ISL:
      std::snprintf(buf, sizeof buf, "isl %d", r.target);
      return buf;
  }
  return "?";
}

}  // namespace

std::vector<double> draw_arrival_times(int count, double rate_hz, RandomSource& rng) {
  std::vector<double> times(static_cast<std::size_t>(std::max(count, 0)));
  double now = 0.0;
  for (auto& t : times) {
    now += rng.exponential(rate_hz);
    t = now;
  }
  return times;
}

const char* to_string(TaskEventKind k) {
  switch (k) {
    case TaskEventKind::ARRIVED:
      return "arrived";
    case TaskEventKind::STARTED:
      return "started";
    case TaskEventKind::HANDOFF:
      return "handoff";
    case TaskEventKind::COMPLETED:
      return "completed";
    case TaskEventKind::FAILED:
      return "failed";
  }
  return "?";
}

const char* to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::PENDING:
      return "pending";
    case TaskStatus::IN_FLIGHT:
      return "in_flight";
    case TaskStatus::DONE:
      return "done";
    case TaskStatus::FAILED:
      return "failed";
  }
  return "?";
}

SatEnv::SatEnv(const ScenarioConfig& cfg) : cfg_(cfg) {
  validate_scenario(cfg_);
  const int M = cfg_.num_leos;
  const int N = cfg_.num_uavs;
  const int L = cfg_.num_users;
  const int K = cfg_.num_tasks;
  const int route_dim = 2 + N + (M - 1);
  for (int m = 0; m < M; ++m) {
    head_dims_.push_back(route_dim);
    head_dims_.push_back(3);
    head_dims_.push_back(3);
    head_dims_.push_back(static_cast<int>(cfg_.step_menu.size()));
  }
  for (int n = 0; n < N; ++n) {
    head_dims_.push_back(9);
  }
  state_dim_ = 1 + 2 * N + 2 * M * (L + N) + N * L + M * (10 + L) + 3 * K;
  done_ = true;  // not usable until reset()
}

void SatEnv::reset(std::uint64_t seed) {
  placement_rng_ = RandomSource(derive_seed(seed, stream::kPlacement));
  arrivals_rng_ = RandomSource(derive_seed(seed, stream::kArrivals));
  channel_rng_ = RandomSource(derive_seed(seed, stream::kChannel));
  csi_rng_ = RandomSource(derive_seed(seed, stream::kCsi));

  const int M = cfg_.num_leos;
  tasks_.clear();
  events_.clear();
  queues_.assign(M, {});
  leo_tx_busy_.assign(M, -1);
  leo_isl_busy_.assign(M, -1);
  uav_busy_.assign(cfg_.num_uavs, -1);
  user_busy_.assign(cfg_.num_users, -1);
  resolved_ = 0;
  done_ = false;
  head_values_.assign(head_dims_.size(), -1);
  head_set_.assign(head_dims_.size(), false);

  place_nodes();
  update_coverage(snap_, cfg_.world);
  draw_arrivals();
  register_arrivals();
  resample_channels();
}

bool SatEnv::done() const { return done_; }

void SatEnv::place_nodes() {
  const auto& w = cfg_.world;
  snap_ = NetworkSnapshot{};
  snap_.slot = 0;

  const double R = cfg_.service_disc_radius_m;
  for (int l = 0; l < cfg_.num_users; ++l) {
    const double r = R * std::sqrt(placement_rng_.uniform());
    const double a = placement_rng_.uniform(0.0, 2.0 * M_PI);
    NodeKinematics u;
    u.kind = NodeKind::USER;
    u.position_m = Vec3(r * std::cos(a), r * std::sin(a), w.earth_radius_m);
    snap_.users.push_back(u);
  }
  for (int n = 0; n < cfg_.num_uavs; ++n) {
    const double r = 0.5 * R * std::sqrt(placement_rng_.uniform());
    const double a = placement_rng_.uniform(0.0, 2.0 * M_PI);
    NodeKinematics u;
    u.kind = NodeKind::UAV;
    u.position_m = Vec3(r * std::cos(a), r * std::sin(a), w.earth_radius_m + w.uav_altitude_m);
    snap_.uavs.push_back(u);
  }

  // a subset of users has no terrestrial backhaul and must be served via UAV
  user_relay_only_.assign(cfg_.num_users, 0);
  const int span = cfg_.max_relay_users - cfg_.min_relay_users;
  int relay_count = cfg_.min_relay_users;
  if (span > 0) {
    relay_count += static_cast<int>(placement_rng_.integer(span + 1));
  }
  relay_count = std::min(relay_count, cfg_.num_users);
  std::vector<int> idx(cfg_.num_users);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < relay_count; ++i) {
    const int j = i + static_cast<int>(placement_rng_.integer(cfg_.num_users - i));
    std::swap(idx[i], idx[j]);
    user_relay_only_[idx[i]] = 1;
  }

  // constellation: one great-circle track through the service zenith with
  // random heading; satellites strung along it at random spacings, the chain
  // centered so roughly half lead and half trail the zenith point
  const double azim = placement_rng_.uniform(0.0, 2.0 * M_PI);
  const Vec3 dir(std::cos(azim), std::sin(azim), 0.0);
  const double orbit_r = w.earth_radius_m + w.leo_altitude_m;
  const Vec3 p0(0.0, 0.0, orbit_r);
  const Vec3 axis = p0.cross(dir).normalized();

  const int M = cfg_.num_leos;
  std::vector<double> along(M, 0.0);
  for (int m = 1; m < M; ++m) {
    along[m] = along[m - 1] + placement_rng_.uniform(cfg_.leo_spacing_min_m, cfg_.leo_spacing_max_m);
  }
  const double mean = std::accumulate(along.begin(), along.end(), 0.0) / M;

  leo_phase_rad_.assign(M, 0.0);
  for (int m = 0; m < M; ++m) {
    const double ang = (along[m] - mean) / orbit_r;
    NodeKinematics s;
    s.kind = NodeKind::LEO;
    s.position_m = rodrigues(p0, axis, ang);
    s.velocity_mps = w.leo_speed_mps * axis.cross(s.position_m).normalized();
    snap_.leos.push_back(s);
    leo_phase_rad_[m] = placement_rng_.uniform(0.0, 2.0 * M_PI);
  }
}

void SatEnv::draw_arrivals() {
  const std::vector<double> times =
      draw_arrival_times(cfg_.num_tasks, cfg_.arrival_rate_hz, arrivals_rng_);
  const double dt = cfg_.world.slot_duration_s;
  tasks_.reserve(times.size());
  for (int k = 0; k < cfg_.num_tasks; ++k) {
    Task t;
    t.id = k;
    t.origin_leo = static_cast<int>(arrivals_rng_.integer(cfg_.num_leos));
    t.dest_user = static_cast<int>(arrivals_rng_.integer(cfg_.num_users));
    t.relay_required = user_relay_only_[t.dest_user] != 0;
    t.arrival_time_s = times[k];
    t.arrival_slot = static_cast<int>(std::ceil(times[k] / dt));
    const double d_max = arrivals_rng_.uniform(cfg_.d_max_min_s, cfg_.d_max_max_s);
    t.deadline_s = times[k] + d_max;
    t.theta_min_db = arrivals_rng_.uniform(cfg_.theta_min_low_db, cfg_.theta_min_high_db);
    t.owner_leo = t.origin_leo;
    tasks_.push_back(t);
  }
}

void SatEnv::register_arrivals() {
  for (Task& t : tasks_) {
    if (!t.registered && t.arrival_slot <= snap_.slot) {
      t.registered = true;
      queues_[t.owner_leo].push_back(t.id);
      TaskEvent ev;
      ev.slot = snap_.slot;
      ev.task = t.id;
      ev.kind = TaskEventKind::ARRIVED;
      events_.push_back(ev);
    }
  }
}

void SatEnv::resample_channels() {
  const int M = cfg_.num_leos;
  const int N = cfg_.num_uavs;
  const int L = cfg_.num_users;
  const double c = cfg_.isl.light_speed_mps;

  chan_.sat_exact.assign(M, std::vector<Complex>(L + N));
  chan_.sat_csi.assign(M, std::vector<Complex>(L + N));
  chan_.uav_user.assign(N, std::vector<Complex>(L));
  chan_.uav_user_csi.assign(N, std::vector<Complex>(L));
  chan_.isl_rate_bps.assign(M, std::vector<double>(M, 0.0));

  SatLinkParams sp;
  sp.antenna_gain = cfg_.antenna_gain;
  sp.wavelength_m = cfg_.wavelength_m;
  for (int m = 0; m < M; ++m) {
    sp.phase_rad = leo_phase_rad_[m];
    for (int j = 0; j < L + N; ++j) {
      const NodeKinematics& rx = j < L ? snap_.users[j] : snap_.uavs[j - L];
      const NodeKinematics& tx = snap_.leos[m];
      const double d = distance(tx, rx);
      const Complex h = sat_channel(d, sp);
      const Vec3 rel = rx.position_m - tx.position_m;
      const Vec3 relv = rx.velocity_mps - tx.velocity_mps;
      const double radial = std::abs(rel.dot(relv)) / d;
      SatLinkParams op = sp;
      op.correlation = csi_correlation(radial * cfg_.carrier_hz / c, d / c);
      chan_.sat_exact[m][j] = h;
      chan_.sat_csi[m][j] = apply_outdated_csi(h, op, csi_rng_);
    }
  }
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      const NodeKinematics& tx = snap_.uavs[n];
      const NodeKinematics& rx = snap_.users[l];
      const double d = distance(tx, rx);
      const Complex h = sample_uav_user_channel(d, cfg_.fading, channel_rng_);
      const Vec3 rel = rx.position_m - tx.position_m;
      const Vec3 relv = rx.velocity_mps - tx.velocity_mps;
      const double radial = std::abs(rel.dot(relv)) / d;
      SatLinkParams op;
      op.correlation = csi_correlation(radial * cfg_.carrier_hz / c, d / c);
      chan_.uav_user[n][l] = h;
      chan_.uav_user_csi[n][l] = apply_outdated_csi(h, op, csi_rng_);
    }
  }
  for (int m = 0; m < M; ++m) {
    for (int m2 = m + 1; m2 < M; ++m2) {
      const double d = distance(snap_.leos[m], snap_.leos[m2]);
      const double r = isl_capacity_bps(d, cfg_.leo_tx_power_w, cfg_.isl);
      chan_.isl_rate_bps[m][m2] = r;
      chan_.isl_rate_bps[m2][m] = r;
    }
  }
}

double SatEnv::rate_bps(LinkKind link, int src, int dst) const {
  switch (link) {
    case LinkKind::LEO_USER:
      if (!snap_.covered_users[src][dst]) {
        return 0.0;
      }
      return capacity_bps(chan_.sat_exact[src][dst], cfg_.leo_tx_power_w, cfg_.bandwidth_hz,
                          cfg_.noise_w);
    case LinkKind::LEO_UAV:
      if (!snap_.covered_uavs[src][dst]) {
        return 0.0;
      }
      return capacity_bps(chan_.sat_exact[src][cfg_.num_users + dst], cfg_.leo_tx_power_w,
                          cfg_.bandwidth_hz, cfg_.noise_w);
    case LinkKind::UAV_USER:
      return capacity_bps(chan_.uav_user[src][dst], cfg_.uav_tx_power_w, cfg_.bandwidth_hz,
                          cfg_.noise_w);
    case LinkKind::ISL:
      return chan_.isl_rate_bps[src][dst];
  }
  return 0.0;
}

double SatEnv::prop_delay_s(LinkKind link, int src, int dst) const {
  const NodeKinematics* a = nullptr;
  const NodeKinematics* b = nullptr;
  switch (link) {
    case LinkKind::LEO_USER:
      a = &snap_.leos[src];
      b = &snap_.users[dst];
      break;
    case LinkKind::LEO_UAV:
      a = &snap_.leos[src];
      b = &snap_.uavs[dst];
      break;
    case LinkKind::UAV_USER:
      a = &snap_.uavs[src];
      b = &snap_.users[dst];
      break;
    case LinkKind::ISL:
      a = &snap_.leos[src];
      b = &snap_.leos[dst];
      break;
  }
  return distance(*a, *b) / cfg_.isl.light_speed_mps;
}

const Task* SatEnv::head_task(int leo) const {
  if (queues_[leo].empty()) {
    return nullptr;
  }
  return &tasks_[queues_[leo].front()];
}

bool SatEnv::leo_can_deliver(int leo, const Task& t) const {
  if (!t.relay_required && snap_.covered_users[leo][t.dest_user]) {
    return true;
  }
  for (int n = 0; n < cfg_.num_uavs; ++n) {
    if (snap_.covered_uavs[leo][n]) {
      return true;
    }
  }
  return false;
}

int SatEnv::menu_index(int steps) const {
  for (std::size_t i = 0; i < cfg_.step_menu.size(); ++i) {
    if (cfg_.step_menu[i] == steps) {
      return static_cast<int>(i);
    }
  }
  throw InvalidChoice("denoise step count is not on the configured menu");
}

RouteChoice SatEnv::decode_route(int leo, int value) const {
  const int N = cfg_.num_uavs;
  RouteChoice r;
  if (value == 0) {
    return r;
  }
  if (value == 1) {
    r.kind = RouteKind::DIRECT;
    return r;
  }
  if (value < 2 + N) {
    r.kind = RouteKind::VIA_UAV;
    r.target = value - 2;
    return r;
  }
  const int idx = value - 2 - N;
  r.kind = RouteKind::ISL;
  r.target = idx >= leo ? idx + 1 : idx;
  return r;
}

int SatEnv::encode_route(int leo, const RouteChoice& r) const {
  const int N = cfg_.num_uavs;
  switch (r.kind) {
    case RouteKind::IDLE:
      return 0;
    case RouteKind::DIRECT:
      return 1;
    case RouteKind::VIA_UAV:
      return 2 + r.target;
    case RouteKind::ISL:
      return 2 + N + (r.target > leo ? r.target - 1 : r.target);
  }
  return -1;
}

SatEnv::Claims SatEnv::empty_claims() const {
  Claims c;
  c.user.assign(cfg_.num_users, 0);
  c.uav.assign(cfg_.num_uavs, 0);
  c.isl.assign(cfg_.num_leos, 0);
  return c;
}

void SatEnv::claim_route(int leo, const RouteChoice& r, Claims& c) const {
  const Task* t = head_task(leo);
  switch (r.kind) {
    case RouteKind::IDLE:
      return;
    case RouteKind::DIRECT:
      c.user[t->dest_user] = 1;
      return;
    case RouteKind::VIA_UAV:
      c.uav[r.target] = 1;
      c.user[t->dest_user] = 1;
      return;
    case RouteKind::ISL:
      c.isl[leo] = 1;
      c.isl[r.target] = 1;
      return;
  }
}

SatEnv::Claims SatEnv::claims_from_heads(int upto_leo) const {
  Claims c = empty_claims();
  for (int m = 0; m < upto_leo; ++m) {
    if (head_set_[4 * m]) {
      claim_route(m, decode_route(m, head_values_[4 * m]), c);
    }
  }
  return c;
}

std::uint32_t SatEnv::route_mask_for(int leo, const Claims* c) const {
  std::uint32_t mask = 1;  // idling is always possible
  const Task* t = head_task(leo);
  if (t == nullptr || done_) {
    return mask;
  }
  const int dest = t->dest_user;
  const bool dest_free = user_busy_[dest] < 0 && (c == nullptr || !c->user[dest]);
  if (leo_tx_busy_[leo] < 0 && dest_free) {
    if (!t->relay_required && snap_.covered_users[leo][dest]) {
      mask |= 1u << 1;
    }
    for (int n = 0; n < cfg_.num_uavs; ++n) {
      if (snap_.covered_uavs[leo][n] && uav_busy_[n] < 0 && (c == nullptr || !c->uav[n])) {
        mask |= 1u << (2 + n);
      }
    }
  }
  // hand a task to a neighbor only when this LEO cannot reach the destination
  // at all and the neighbor can; one relay hop per task
  if (!t->plan_locked && leo_isl_busy_[leo] < 0 && (c == nullptr || !c->isl[leo]) &&
      !leo_can_deliver(leo, *t)) {
    for (int m2 = 0; m2 < cfg_.num_leos; ++m2) {
      if (m2 == leo || leo_isl_busy_[m2] >= 0 || (c != nullptr && c->isl[m2])) {
        continue;
      }
      if (leo_can_deliver(m2, *t)) {
        RouteChoice r;
        r.kind = RouteKind::ISL;
        r.target = m2;
        mask |= 1u << encode_route(leo, r);
      }
    }
  }
  return mask;
}

std::uint32_t SatEnv::mode_mask_for(int leo, const RouteChoice& route) const {
  if (route.kind == RouteKind::IDLE) {
    return 1u;
  }
  const Task* t = head_task(leo);
  if (t != nullptr && t->plan_locked) {
    return 1u << static_cast<int>(t->plan.mode);
  }
  if (forced_mode_) {
    return 1u << static_cast<int>(*forced_mode_);
  }
  return 0b111u;
}

std::uint32_t SatEnv::layer_mask_for(int leo, const RouteChoice& route, Mode mode) const {
  if (route.kind == RouteKind::IDLE) {
    return 1u;
  }
  const Task* t = head_task(leo);
  if (t != nullptr && t->plan_locked) {
    return 1u << (t->plan.layer - 1);
  }
  if (mode != Mode::TEXT_IMAGE) {
    return 1u;
  }
  return 0b111u;
}

std::uint32_t SatEnv::steps_mask_for(int leo, const RouteChoice& route, Mode mode) const {
  if (route.kind == RouteKind::IDLE) {
    return 1u;
  }
  const Task* t = head_task(leo);
  if (t != nullptr && t->plan_locked) {
    return 1u << menu_index(t->plan.denoise_steps);
  }
  if (mode == Mode::BIT) {
    return 1u;
  }
  std::uint32_t mask = 0;
  for (std::size_t i = 0; i < cfg_.step_menu.size(); ++i) {
    if (cfg_.step_menu[i] >= 1 && cfg_.step_menu[i] <= cfg_.modes.max_steps) {
      mask |= 1u << i;
    }
  }
  return mask;
}

VecX SatEnv::observe() const {
  VecX x = VecX::Zero(state_dim_);
  const int M = cfg_.num_leos;
  const int N = cfg_.num_uavs;
  const int L = cfg_.num_users;
  const double now = snap_.slot * cfg_.world.slot_duration_s;
  const double q_ref = cfg_.modes.bit_quality_db;
  int i = 0;

  x[i++] = static_cast<double>(snap_.slot) / cfg_.horizon_slots;
  for (int n = 0; n < N; ++n) {
    x[i++] = snap_.uavs[n].position_m.x() / cfg_.service_disc_radius_m;
    x[i++] = snap_.uavs[n].position_m.y() / cfg_.service_disc_radius_m;
  }
  for (int m = 0; m < M; ++m) {
    for (int l = 0; l < L; ++l) {
      x[i++] = snap_.covered_users[m][l] ? 1.0 : 0.0;
    }
    for (int n = 0; n < N; ++n) {
      x[i++] = snap_.covered_uavs[m][n] ? 1.0 : 0.0;
    }
  }
  // spectral efficiencies from the *outdated* estimates: the scheduler never
  // sees the realized channel of the slot it is deciding
  for (int m = 0; m < M; ++m) {
    for (int j = 0; j < L + N; ++j) {
      x[i++] =
          capacity_bps(chan_.sat_csi[m][j], cfg_.leo_tx_power_w, 1.0, cfg_.noise_w) / q_ref;
    }
  }
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      x[i++] =
          capacity_bps(chan_.uav_user_csi[n][l], cfg_.uav_tx_power_w, 1.0, cfg_.noise_w) / q_ref;
    }
  }
  const double theta_span = cfg_.theta_min_high_db - cfg_.theta_min_low_db;
  for (int m = 0; m < M; ++m) {
    const Task* t = head_task(m);
    x[i++] = t != nullptr ? 1.0 : 0.0;
    if (t != nullptr) {
      x[i + t->dest_user] = 1.0;
    }
    i += L;
    x[i++] = (t != nullptr && t->relay_required) ? 1.0 : 0.0;
    if (t != nullptr) {
      const double d_max = t->deadline_s - t->arrival_time_s;
      x[i++] = std::clamp((now - t->arrival_time_s) / d_max, 0.0, 1.0);
      x[i++] = d_max / cfg_.d_max_max_s;
      x[i++] = theta_span > 0.0 ? (t->theta_min_db - cfg_.theta_min_low_db) / theta_span : 0.0;
      const double bits =
          t->plan_locked ? payload_bits(t->plan, cfg_.modes) : cfg_.data_bits;
      x[i++] = std::log10(1.0 + bits) / 8.0;
      x[i++] = t->plan_locked ? 1.0 : 0.0;
    } else {
      i += 5;
    }
    x[i++] = leo_tx_busy_[m] >= 0 ? 1.0 : 0.0;
    x[i++] = leo_isl_busy_[m] >= 0 ? 1.0 : 0.0;
    x[i++] = static_cast<double>(queues_[m].size()) / cfg_.num_tasks;
  }
  for (const Task& t : tasks_) {
    const double d_max = t.deadline_s - t.arrival_time_s;
    double progress = 0.0;
    double quality = 0.0;
    double status = 0.0;
    if (t.status == TaskStatus::DONE || t.status == TaskStatus::FAILED) {
      progress = std::clamp((t.finish_time_s - t.arrival_time_s) / d_max, 0.0, 1.0);
      status = t.status == TaskStatus::DONE ? 1.0 : -1.0;
      quality = t.status == TaskStatus::DONE ? t.quality_db / q_ref : 0.0;
    } else if (t.registered) {
      progress = std::clamp((now - t.arrival_time_s) / d_max, 0.0, 1.0);
      status = t.status == TaskStatus::IN_FLIGHT ? 0.5 : 0.25;
    }
    x[i++] = progress;
    x[i++] = quality;
    x[i++] = status;
  }
  if (i != state_dim_) {
    throw Error("observation layout is inconsistent with state_dim");
  }
  return x;
}

std::uint32_t SatEnv::head_mask(int head) const {
  if (head < 0 || head >= static_cast<int>(head_dims_.size())) {
    throw IllegalAction("head index out of range");
  }
  if (done_) {
    return 1u;
  }
  const int M = cfg_.num_leos;
  if (head >= 4 * M) {
    return force_hover_ ? 1u : 0x1ffu;
  }
  const int leo = head / 4;
  const int sub = head % 4;
  if (sub == 0) {
    const Claims c = claims_from_heads(leo);
    return route_mask_for(leo, &c);
  }
  if (!head_set_[4 * leo]) {
    throw Error("route head must be set before mode/layer/steps");
  }
  const RouteChoice r = decode_route(leo, head_values_[4 * leo]);
  if (sub == 1) {
    return mode_mask_for(leo, r);
  }
  if (!head_set_[4 * leo + 1]) {
    throw Error("mode head must be set before layer/steps");
  }
  const Mode mode = static_cast<Mode>(head_values_[4 * leo + 1]);
  if (sub == 2) {
    return layer_mask_for(leo, r, mode);
  }
  return steps_mask_for(leo, r, mode);
}

void SatEnv::set_head(int head, int value) {
  if (head < 0 || head >= static_cast<int>(head_dims_.size())) {
    throw IllegalAction("head index out of range");
  }
  if (value < 0 || value >= head_dims_[head]) {
    throw IllegalAction("head value out of range");
  }
  if (((head_mask(head) >> value) & 1u) == 0u) {
    throw IllegalAction("head value is masked");
  }
  head_values_[head] = value;
  head_set_[head] = true;
}

double SatEnv::commit_slot() {
  if (done_) {
    throw Error("commit_slot on a finished episode");
  }
  for (std::size_t h = 0; h < head_dims_.size(); ++h) {
    if (!head_set_[h]) {
      throw IllegalAction("commit_slot with unset heads");
    }
  }
  const int M = cfg_.num_leos;
  EnvAction a;
  for (int m = 0; m < M; ++m) {
    a.route.push_back(decode_route(m, head_values_[4 * m]));
    ModeChoice mc;
    mc.mode = static_cast<Mode>(head_values_[4 * m + 1]);
    mc.layer = head_values_[4 * m + 2] + 1;
    mc.denoise_steps = cfg_.step_menu[head_values_[4 * m + 3]];
    a.mode.push_back(mc);
  }
  for (int n = 0; n < cfg_.num_uavs; ++n) {
    a.uav_motion.push_back(head_values_[4 * M + n]);
  }
  const StepResult res = step(a);
  std::fill(head_values_.begin(), head_values_.end(), -1);
  std::fill(head_set_.begin(), head_set_.end(), false);
  return res.reward;
}

StepResult SatEnv::step(const EnvAction& action) {
  if (done_) {
    throw Error("step on a finished episode");
  }
  const int M = cfg_.num_leos;
  const int N = cfg_.num_uavs;
  if (static_cast<int>(action.route.size()) != M || static_cast<int>(action.mode.size()) != M ||
      static_cast<int>(action.uav_motion.size()) != N) {
    throw IllegalAction("action shape does not match the population");
  }

  Claims c = empty_claims();
  for (int m = 0; m < M; ++m) {
    const RouteChoice& r = action.route[m];
    const int rv = encode_route(m, r);
    const std::uint32_t rm = route_mask_for(m, &c);
    if (rv < 0 || rv >= head_dims_[4 * m] || ((rm >> rv) & 1u) == 0u) {
      throw IllegalAction("route choice for leo " + std::to_string(m) + " is not legal");
    }
    if (r.kind != RouteKind::IDLE) {
      const ModeChoice& mc = action.mode[m];
      validate_choice(mc, cfg_.modes);
      if (((mode_mask_for(m, r) >> static_cast<int>(mc.mode)) & 1u) == 0u) {
        throw IllegalAction("mode choice for leo " + std::to_string(m) + " is not legal");
      }
      if (((layer_mask_for(m, r, mc.mode) >> (mc.layer - 1)) & 1u) == 0u) {
        throw IllegalAction("layer choice for leo " + std::to_string(m) + " is not legal");
      }
      if (((steps_mask_for(m, r, mc.mode) >> menu_index(mc.denoise_steps)) & 1u) == 0u) {
        throw IllegalAction("step count for leo " + std::to_string(m) + " is not legal");
      }
    }
    claim_route(m, r, c);
  }
  for (int n = 0; n < N; ++n) {
    const int mv = action.uav_motion[n];
    if (mv < 0 || mv > 8) {
      throw IllegalAction("uav motion value out of range");
    }
    if (force_hover_ && mv != 0) {
      throw IllegalAction("uav motion is frozen");
    }
  }

  StepResult res;
  for (int m = 0; m < M; ++m) {
    if (action.route[m].kind != RouteKind::IDLE) {
      start_plan(m, action.route[m], action.mode[m], res.events);
    }
  }
  progress_pipelines(res.events, res.reward);

  const double step_len = cfg_.world.uav_max_speed_mps * cfg_.world.slot_duration_s;
  std::vector<Vec3> disp(N);
  for (int n = 0; n < N; ++n) {
    disp[n] = motion_direction(action.uav_motion[n]) * step_len;
  }
  snap_ = advance(snap_, disp, cfg_.world);
  register_arrivals();
  resample_channels();

  if (resolved_ >= cfg_.num_tasks) {
    done_ = true;
  }
  if (!done_ && snap_.slot >= cfg_.horizon_slots) {
    fail_unresolved_at_horizon(res.events);
    done_ = true;
  }
  res.done = done_;
  events_.insert(events_.end(), res.events.begin(), res.events.end());
  return res;
}

void SatEnv::start_plan(int leo, const RouteChoice& route, const ModeChoice& mode,
                        std::vector<TaskEvent>& ev) {
  Task& t = tasks_[queues_[leo].front()];
  queues_[leo].pop_front();

  const ModeChoice plan = t.plan_locked ? t.plan : mode;
  validate_choice(plan, cfg_.modes);
  const double payload = payload_bits(plan, cfg_.modes);
  const ComputeCost cc = compute_cost(plan, cfg_.modes);
  const bool semantic = plan.mode != Mode::BIT;

  t.plan = plan;
  t.status = TaskStatus::IN_FLIGHT;
  t.stage = 0;
  t.pipeline.clear();
  t.quality_db = quality_db(plan, cfg_.modes);
  t.compute_gflop = cc.total();

  auto add = [&t](StageKind k, LinkKind lk, int src, int dst, double remaining) {
    PipelineStage s;
    s.kind = k;
    s.link = lk;
    s.src = src;
    s.dst = dst;
    s.remaining = remaining;
    t.pipeline.push_back(s);
  };

  // encoding happens once, at the task's origin; a relayed task arrives at its
  // delivering LEO already encoded
  if (semantic && !t.plan_locked && cc.tx_gflop > 0.0) {
    add(StageKind::TX_COMPUTE, LinkKind::LEO_USER, -1, -1, cc.tx_gflop);
  }
  switch (route.kind) {
    case RouteKind::DIRECT:
      add(StageKind::SERIALIZE, LinkKind::LEO_USER, leo, t.dest_user, payload);
      add(StageKind::PROP, LinkKind::LEO_USER, leo, t.dest_user, -1.0);
      if (semantic && cc.rx_gflop > 0.0) {
        add(StageKind::RX_COMPUTE, LinkKind::LEO_USER, -1, -1, cc.rx_gflop);
      }
      leo_tx_busy_[leo] = t.id;
      t.hold_leo = leo;
      user_busy_[t.dest_user] = t.id;
      t.hold_user = t.dest_user;
      break;
    case RouteKind::VIA_UAV: {
      const int n = route.target;
      add(StageKind::SERIALIZE, LinkKind::LEO_UAV, leo, n, payload);
      add(StageKind::PROP, LinkKind::LEO_UAV, leo, n, -1.0);
      if (semantic && cc.rx_gflop > 0.0) {
        add(StageKind::RX_COMPUTE, LinkKind::LEO_UAV, -1, -1, cc.rx_gflop);
      }
      // the relay delivers source-equivalent data: either the stored file or
      // the reconstruction it just computed
      add(StageKind::SERIALIZE, LinkKind::UAV_USER, n, t.dest_user, cfg_.modes.bit_payload_bits);
      add(StageKind::PROP, LinkKind::UAV_USER, n, t.dest_user, -1.0);
      leo_tx_busy_[leo] = t.id;
      t.hold_leo = leo;
      uav_busy_[n] = t.id;
      t.hold_uav = n;
      user_busy_[t.dest_user] = t.id;
      t.hold_user = t.dest_user;
      break;
    }
    case RouteKind::ISL: {
      const int m2 = route.target;
      add(StageKind::SERIALIZE, LinkKind::ISL, leo, m2, payload);
      add(StageKind::PROP, LinkKind::ISL, leo, m2, -1.0);
      leo_isl_busy_[leo] = t.id;
      leo_isl_busy_[m2] = t.id;
      t.hold_leo = leo;
      t.hold_isl_peer = m2;
      break;
    }
    case RouteKind::IDLE:
      throw IllegalAction("cannot start an idle plan");
  }

  TaskEvent e;
  e.slot = snap_.slot;
  e.task = t.id;
  e.kind = TaskEventKind::STARTED;
  e.delay_s = snap_.slot * cfg_.world.slot_duration_s - t.arrival_time_s;
  e.quality_db = t.quality_db;
  e.compute_gflop = t.compute_gflop;
  e.detail = route_detail(route);
  ev.push_back(e);
}

void SatEnv::progress_pipelines(std::vector<TaskEvent>& ev, double& reward) {
  const double dt = cfg_.world.slot_duration_s;
  const double t0 = snap_.slot * dt;
  const double t_end = t0 + dt;

  for (Task& t : tasks_) {
    if (t.status != TaskStatus::IN_FLIGHT) {
      continue;
    }
    double cur = 0.0;
    while (t.stage < t.pipeline.size() && cur < dt - 1e-15) {
      PipelineStage& s = t.pipeline[t.stage];
      switch (s.kind) {
        case StageKind::TX_COMPUTE: {
          const double thr = cfg_.tx_throughput_gflops;
          const double step = std::min(s.remaining / thr, dt - cur);
          s.remaining -= step * thr;
          cur += step;
          break;
        }
        case StageKind::RX_COMPUTE: {
          const double thr = cfg_.rx_throughput_gflops;
          const double step = std::min(s.remaining / thr, dt - cur);
          s.remaining -= step * thr;
          cur += step;
          break;
        }
        case StageKind::SERIALIZE: {
          const double rate = rate_bps(s.link, s.src, s.dst);
          if (rate <= 0.0) {
            cur = dt;  // link is down this slot; the transfer stalls
            break;
          }
          const double step = std::min(s.remaining / rate, dt - cur);
          s.remaining -= step * rate;
          cur += step;
          break;
        }
        case StageKind::PROP: {
          if (s.remaining < 0.0) {
            s.remaining = prop_delay_s(s.link, s.src, s.dst);
          }
          const double step = std::min(s.remaining, dt - cur);
          s.remaining -= step;
          cur += step;
          break;
        }
      }
      if (s.remaining > kDoneEps) {
        continue;
      }
      // stage finished: release the transmitter-side resource it was holding
      if (s.kind == StageKind::SERIALIZE) {
        if (s.link == LinkKind::ISL) {
          leo_isl_busy_[s.src] = -1;
          leo_isl_busy_[s.dst] = -1;
          t.hold_leo = -1;
          t.hold_isl_peer = -1;
        } else if (s.link == LinkKind::UAV_USER) {
          uav_busy_[s.src] = -1;
          t.hold_uav = -1;
        } else {
          leo_tx_busy_[s.src] = -1;
          t.hold_leo = -1;
        }
      }
      const bool was_isl_prop = s.kind == StageKind::PROP && s.link == LinkKind::ISL;
      const int isl_dst = s.dst;
      ++t.stage;
      if (was_isl_prop) {
        // relay hop done: the task requeues at the receiving LEO with its
        // plan locked; the new owner decides the delivery route
        t.owner_leo = isl_dst;
        t.status = TaskStatus::PENDING;
        t.plan_locked = true;
        queues_[isl_dst].push_back(t.id);
        TaskEvent e;
        e.slot = snap_.slot;
        e.task = t.id;
        e.kind = TaskEventKind::HANDOFF;
        e.delay_s = t0 + cur - t.arrival_time_s;
        e.quality_db = t.quality_db;
        e.compute_gflop = t.compute_gflop;
        e.detail = "leo " + std::to_string(isl_dst);
        ev.push_back(e);
        break;
      }
    }
    if (t.status != TaskStatus::IN_FLIGHT) {
      continue;
    }
    if (t.stage >= t.pipeline.size()) {
      finish_task(t, true, t0 + cur, ev, reward);
    } else if (t_end >= t.deadline_s) {
      finish_task(t, false, t.deadline_s, ev, reward);
    }
  }

  // tasks still waiting in a queue fail the moment their deadline passes
  for (Task& t : tasks_) {
    if (t.status == TaskStatus::PENDING && t.registered && t_end >= t.deadline_s) {
      auto& q = queues_[t.owner_leo];
      q.erase(std::remove(q.begin(), q.end(), t.id), q.end());
      finish_task(t, false, t.deadline_s, ev, reward);
    }
  }
}

void SatEnv::finish_task(Task& t, bool completed, double time_s, std::vector<TaskEvent>& ev,
                         double& reward) {
  release_task_resources(t);
  t.finish_time_s = time_s;
  ++resolved_;
  const double delay = time_s - t.arrival_time_s;
  const double d_max = t.deadline_s - t.arrival_time_s;
  const bool in_time = completed && time_s <= t.deadline_s + 1e-12;
  const bool good_enough = t.quality_db >= t.theta_min_db - 1e-12;

  TaskEvent e;
  e.slot = snap_.slot;
  e.task = t.id;
  e.delay_s = delay;
  e.quality_db = t.quality_db;
  e.compute_gflop = t.compute_gflop;
  if (in_time && good_enough) {
    t.status = TaskStatus::DONE;
    TaskOutcome o;
    o.delay_s = delay;
    o.quality_db = t.quality_db;
    o.compute_gflop = t.compute_gflop;
    o.completed = true;
    t.sem = sem_value(o, cfg_.weights, cfg_.norm_refs(d_max, t.theta_min_db));
    reward += t.sem / cfg_.num_tasks;
    e.kind = TaskEventKind::COMPLETED;
    e.sem = t.sem;
  } else {
    t.status = TaskStatus::FAILED;
    t.sem = 0.0;
    e.kind = TaskEventKind::FAILED;
    e.detail = !completed || !in_time ? "deadline" : "quality";
  }
  ev.push_back(e);
}

void SatEnv::release_task_resources(Task& t) {
  if (t.hold_isl_peer >= 0) {
    if (leo_isl_busy_[t.hold_leo] == t.id) {
      leo_isl_busy_[t.hold_leo] = -1;
    }
    if (leo_isl_busy_[t.hold_isl_peer] == t.id) {
      leo_isl_busy_[t.hold_isl_peer] = -1;
    }
    t.hold_leo = -1;
    t.hold_isl_peer = -1;
  } else if (t.hold_leo >= 0) {
    if (leo_tx_busy_[t.hold_leo] == t.id) {
      leo_tx_busy_[t.hold_leo] = -1;
    }
    t.hold_leo = -1;
  }
  if (t.hold_uav >= 0) {
    if (uav_busy_[t.hold_uav] == t.id) {
      uav_busy_[t.hold_uav] = -1;
    }
    t.hold_uav = -1;
  }
  if (t.hold_user >= 0) {
    if (user_busy_[t.hold_user] == t.id) {
      user_busy_[t.hold_user] = -1;
    }
    t.hold_user = -1;
  }
}

void SatEnv::fail_unresolved_at_horizon(std::vector<TaskEvent>& ev) {
  for (Task& t : tasks_) {
    if (t.status == TaskStatus::DONE || t.status == TaskStatus::FAILED) {
      continue;
    }
    release_task_resources(t);
    t.status = TaskStatus::FAILED;
    t.sem = 0.0;
    t.finish_time_s = t.deadline_s;
    ++resolved_;
    TaskEvent e;
    e.slot = snap_.slot;
    e.task = t.id;
    e.kind = TaskEventKind::FAILED;
    e.delay_s = t.deadline_s - t.arrival_time_s;
    e.quality_db = t.quality_db;
    e.compute_gflop = t.compute_gflop;
    e.detail = "horizon";
    ev.push_back(e);
  }
  for (auto& q : queues_) {
    q.clear();
  }
}

ActionMask SatEnv::legal_action_mask() const {
  ActionMask am;
  const int M = cfg_.num_leos;
  for (int m = 0; m < M; ++m) {
    const std::uint32_t rm = route_mask_for(m, nullptr);
    am.route.push_back(rm);
    if (rm <= 1u) {
      am.mode.push_back(1u);
      am.layer.push_back(1u);
      am.steps.push_back(1u);
      continue;
    }
    // some transmitting route exists; every other LEO can idle, so the mode,
    // layer and step projections reduce to this LEO's own collapse rules
    int first = 1;
    while (((rm >> first) & 1u) == 0u) {
      ++first;
    }
    const RouteChoice rep = decode_route(m, first);
    const std::uint32_t mm = mode_mask_for(m, rep);
    am.mode.push_back(mm);
    std::uint32_t lm = 0;
    std::uint32_t sm = 0;
    for (int mode = 0; mode < 3; ++mode) {
      if (((mm >> mode) & 1u) != 0u) {
        lm |= layer_mask_for(m, rep, static_cast<Mode>(mode));
        sm |= steps_mask_for(m, rep, static_cast<Mode>(mode));
      }
    }
    am.layer.push_back(lm);
    am.steps.push_back(sm);
  }
  for (int n = 0; n < cfg_.num_uavs; ++n) {
    am.motion.push_back(force_hover_ ? 1u : 0x1ffu);
  }
  return am;
}

}  // namespace semsat
