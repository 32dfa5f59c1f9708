#include "semsat/geometry.hpp"

#include <cmath>

namespace semsat {

double distance(const NodeKinematics& a, const NodeKinematics& b) {
  const double d = (a.position_m - b.position_m).norm();
  if (d <= 0.0) {
    throw NonPositiveDistance("coincident node positions");
  }
  return d;
}

double elevation_angle_deg(const NodeKinematics& leo, const NodeKinematics& ground) {
  const double rs = leo.position_m.norm();
  const double rg = ground.position_m.norm();
  const double ratio = rg / rs;
  double cosg = ground.position_m.dot(leo.position_m) / (rg * rs);
  cosg = std::clamp(cosg, -1.0, 1.0);
  const double denom = std::sqrt(1.0 + ratio * ratio - 2.0 * ratio * cosg);
  double sin_el = (cosg - ratio) / denom;
  sin_el = std::clamp(sin_el, -1.0, 1.0);
  return std::asin(sin_el) * 180.0 / M_PI;
}

void update_coverage(NetworkSnapshot& snap, const WorldConfig& cfg) {
  const double zeta = cfg.min_elevation_deg;
  snap.covered_users.assign(snap.leos.size(), std::vector<char>(snap.users.size(), 0));
  snap.covered_uavs.assign(snap.leos.size(), std::vector<char>(snap.uavs.size(), 0));
  for (std::size_t m = 0; m < snap.leos.size(); ++m) {
    for (std::size_t l = 0; l < snap.users.size(); ++l) {
      snap.covered_users[m][l] = elevation_angle_deg(snap.leos[m], snap.users[l]) >= zeta ? 1 : 0;
    }
    for (std::size_t n = 0; n < snap.uavs.size(); ++n) {
      snap.covered_uavs[m][n] = elevation_angle_deg(snap.leos[m], snap.uavs[n]) >= zeta ? 1 : 0;
    }
  }
}

namespace {

// Rodrigues rotation about a unit axis.
Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return v * c + axis.cross(v) * s + axis * (axis.dot(v)) * (1.0 - c);
}

}  // namespace

NetworkSnapshot advance(const NetworkSnapshot& snap,
                        const std::vector<Vec3>& uav_displacements_m, const WorldConfig& cfg) {
  if (uav_displacements_m.size() != snap.uavs.size()) {
    throw IllegalAction("one displacement per UAV required");
  }
  NetworkSnapshot out = snap;
  const double dt = cfg.slot_duration_s;

  for (auto& leo : out.leos) {
    const double speed = leo.velocity_mps.norm();
    if (speed <= 0.0) {
      continue;
    }
    const Vec3 axis = leo.position_m.cross(leo.velocity_mps).normalized();
    const double angle = speed * dt / leo.position_m.norm();
    leo.position_m = rotate_about(leo.position_m, axis, angle);
    leo.velocity_mps = rotate_about(leo.velocity_mps, axis, angle);
  }

  const double max_step = cfg.uav_max_speed_mps * dt;
  for (std::size_t n = 0; n < out.uavs.size(); ++n) {
    const Vec3& d = uav_displacements_m[n];
    if (std::abs(d.z()) > 1e-9) {
      throw AltitudeViolation("UAV displacement must stay in the tangent plane");
    }
    if (d.norm() > max_step * (1.0 + 1e-9)) {
      throw DisplacementTooFast("UAV displacement exceeds max speed for one slot");
    }
    out.uavs[n].position_m += d;
    out.uavs[n].velocity_mps = d / dt;
  }

  out.slot = snap.slot + 1;
  update_coverage(out, cfg);
  return out;
}

}  // namespace semsat
