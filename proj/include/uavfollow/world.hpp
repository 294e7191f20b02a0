#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "uavfollow/geometry.hpp"
#include "uavfollow/servo.hpp"

namespace uavfollow {

enum class TrajectoryKind { FigureEight, Line, Hover, WaypointList };

std::string_view to_string(TrajectoryKind kind);
/// Throws std::invalid_argument for unknown names.
TrajectoryKind trajectory_kind_from_string(std::string_view name);

struct Waypoint {
  Pose3D pose;
  double time = 0.0;  // s
};

/// Parametric target motion around `center`.
///   figure_eight: (Ax sin(wt), Ay sin(2wt), Az sin(wt)), w = 2 pi / period
///   line:         (Ax, Ay, Az) * sin(wt)
///   hover:        center
///   waypoint_list: piecewise-linear through `waypoints`, holding the last one
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::FigureEight;
  double amplitude_x = 3.0;
  double amplitude_y = 1.5;
  double amplitude_z = 1.0;
  double period = 60.0;
  Pose3D center{0.0, 0.0, 5.0, 0.0};
  std::vector<Waypoint> waypoints;

  void validate() const;
};

/// Follower reference tracking: first-order lag with time constant
/// `response_tau`, rate limited per axis.
struct FollowerKinematics {
  double max_yaw_rate = 0.6;   // rad/s
  double max_climb_rate = 1.0; // m/s
  double max_speed = 8.0;      // m/s
  double response_tau = 0.3;   // s

  void validate() const;
};

/// Synthetic detector error model. The true box gets Gaussian jitter on the
/// center (center_sigma) and on the size (size_sigma) plus uniform
/// [-propeller_jitter, propeller_jitter] on w and h independently.
struct DetectorNoiseSpec {
  double center_sigma = 1.5;
  double size_sigma = 1.0;
  double propeller_jitter = 1.5;
  double dropout_prob = 0.03;
  double burst_prob = 0.005;  // per-frame chance a burst starts
  int burst_max_len = 10;     // frames
  double false_positive_rate = 0.05;
  double confidence_lo = 0.6;
  double confidence_hi = 0.95;
  double false_positive_confidence_lo = 0.2;
  double false_positive_confidence_hi = 0.6;
  std::uint64_t seed = 42;

  static DetectorNoiseSpec noiseless();
  void validate() const;
};

struct WorldState {
  double t = 0.0;
  long frame = 0;
  Pose3D target;
  Pose3D follower;
  double follower_height_ref = 0.0;
  double follower_yaw_ref = 0.0;
  double follower_speed = 0.0;  // m/s along the follower's yaw
  double true_distance = 0.0;

  /// Follower at rest with references equal to its pose.
  static WorldState initial(const Pose3D& target, const Pose3D& follower);
};

Pose3D target_pose(const TrajectorySpec& spec, double t);

/// Applies one command. Yaw and height references accumulate the relative
/// command; the pitch command sets a forward-speed reference of
/// (dtheta / dtheta_max) * max_speed. Time, frame and target are untouched.
WorldState step_follower(const WorldState& state, const ServoCommand& cmd,
                         const FollowerKinematics& kin, double dt, double dtheta_max);

/// step_follower followed by advancing time, frame and target.
WorldState advance_world(const WorldState& state, const TrajectorySpec& trajectory,
                         const ServoCommand& cmd, const FollowerKinematics& kin, double dt,
                         double dtheta_max);

/// Whether the detector misses the target on this frame (independent dropout
/// or a burst covering it). Pure in (noise.seed, frame).
bool frame_dropped(const DetectorNoiseSpec& noise, long frame);

/// Emulated detector output for one frame. The true detection, when present,
/// comes first; false positives follow. Pure in (state, noise, seed, frame).
std::vector<Detection> sense(const WorldState& state, const DetectorNoiseSpec& noise,
                             const CameraModel& cam, double target_extent);

}  // namespace uavfollow
