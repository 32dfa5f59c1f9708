#pragma once

#include <vector>

#include "semsat/errors.hpp"
#include "semsat/types.hpp"

namespace semsat {

// World frame: Earth-centered, fixed at episode start. The service area sits
// on the local tangent plane at (0, 0, earth_radius): users at z = R_e, UAVs
// at z = R_e + uav_altitude. LEOs ride great circles of radius
// R_e + leo_altitude, so their height above the sphere is exact at all times.
struct WorldConfig {
  double earth_radius_m = 6371000.0;
  double leo_altitude_m = 750000.0;
  double uav_altitude_m = 100.0;
  double leo_speed_mps = 7800.0;
  double uav_max_speed_mps = 12.0;
  double min_elevation_deg = 40.0;
  double slot_duration_s = 0.1;
};

enum class NodeKind { LEO, UAV, USER };

struct NodeKinematics {
  NodeKind kind = NodeKind::USER;
  Vec3 position_m = Vec3::Zero();
  Vec3 velocity_mps = Vec3::Zero();
};

struct NetworkSnapshot {
  int slot = 0;
  std::vector<NodeKinematics> leos;
  std::vector<NodeKinematics> uavs;
  std::vector<NodeKinematics> users;
  // covered_users[m][l] / covered_uavs[m][n]: elevation of LEO m seen from the
  // node is at least the configured mask angle
  std::vector<std::vector<char>> covered_users;
  std::vector<std::vector<char>> covered_uavs;
};

/**
 * Euclidean distance between two nodes.
 * @throws NonPositiveDistance when the positions coincide.
 */
double distance(const NodeKinematics& a, const NodeKinematics& b);

/**
 * Elevation angle of a LEO above the local horizon of a ground-side node,
 * in degrees. Spherical-Earth closed form driven by the central angle between
 * the two position vectors:
 *   sin(el) = (cos g - r) / sqrt(1 + r^2 - 2 r cos g),  r = |ground| / |leo|.
 */
double elevation_angle_deg(const NodeKinematics& leo, const NodeKinematics& ground);

// Recompute both coverage tables of a snapshot in place.
void update_coverage(NetworkSnapshot& snap, const WorldConfig& cfg);

/**
 * Advance the snapshot by one slot. LEOs move along their great-circle tracks
 * by leo speed x slot duration (arc length); UAVs move by the given tangent
 * plane displacement at constant height; users stay fixed. Coverage is
 * recomputed and the slot index incremented.
 *
 * @param uav_displacements_m one (dx, dy, 0) vector per UAV for this slot
 * @throws DisplacementTooFast when |d| exceeds uav_max_speed x slot_duration
 * @throws AltitudeViolation when a displacement has a vertical component
 */
NetworkSnapshot advance(const NetworkSnapshot& snap,
                        const std::vector<Vec3>& uav_displacements_m, const WorldConfig& cfg);

}  // namespace semsat
