#pragma once

#include <optional>

#include "uavfollow/geometry.hpp"
#include "uavfollow/kalman.hpp"

namespace uavfollow {

/// Constants of the deadbanded servo laws. Horizontal and vertical centering
/// share the same deadband [N, M]; distance is held inside [W, V].
struct ServoConfig {
  double dpsi_max = 0.05;   // rad
  double dh_max = 0.05;     // m
  double dtheta_max = 0.1;  // rad
  double M = 0.6;
  double N = 0.4;
  double V = 9.0;            // m, far threshold
  double W = 6.0;            // m, near threshold
  double d_area_max = 15.0;  // m

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Relative references: yaw and height are added to the follower's current
/// references, pitch is a setpoint for the current frame.
struct ServoCommand {
  double dpsi = 0.0;    // rad, positive turns counter-clockwise (left)
  double dh = 0.0;      // m, positive climbs
  double dtheta = 0.0;  // rad, positive pitches forward

  friend bool operator==(const ServoCommand&, const ServoCommand&) = default;
};

double yaw_command(double xc_norm, const ServoConfig& cfg);
double height_command(double yc_norm, const ServoConfig& cfg);
/// Clamped to [-dtheta_max, dtheta_max].
double pitch_command(double d_svr, const ServoConfig& cfg);

/// Zero command when there is no estimate. A missing distance only disables
/// the pitch law.
ServoCommand servo_step(const TrackState* estimate, std::optional<double> d_svr,
                        const CameraModel& cam, const ServoConfig& cfg);

/// Same laws applied to an already-extracted box.
ServoCommand servo_step(const std::optional<BoundingBox>& estimate, std::optional<double> d_svr,
                        const CameraModel& cam, const ServoConfig& cfg);

}  // namespace uavfollow
