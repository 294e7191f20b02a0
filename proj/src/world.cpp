#include "uavfollow/world.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace uavfollow {

namespace {

void require(bool ok, const char* scope, const std::string& what) {
  if (!ok) {
    throw std::invalid_argument(std::string(scope) + ": " + what);
  }
}

// Independent stream per (seed, frame, purpose).
std::mt19937_64 frame_rng(std::uint64_t seed, long frame, std::uint32_t stream) {
  const auto f = static_cast<std::uint64_t>(frame);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(f >> 32), stream};
  return std::mt19937_64(seq);
}

enum Stream : std::uint32_t { kDropout = 1, kBurst = 2, kBox = 3, kClutter = 4 };

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (!(hi > lo)) {
    return lo;
  }
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(std::mt19937_64& rng, double sigma) {
  if (!(sigma > 0.0)) {
    return 0.0;
  }
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

// First-order response toward `error`, capped at `max_step` in magnitude.
double lag_step(double error, double dt, double tau, double max_step) {
  const double step = error * (1.0 - std::exp(-dt / tau));
  return std::clamp(step, -max_step, max_step);
}

}  // namespace

std::string_view to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::FigureEight: return "figure_eight";
    case TrajectoryKind::Line: return "line";
    case TrajectoryKind::Hover: return "hover";
    case TrajectoryKind::WaypointList: return "waypoint_list";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view name) {
  for (auto k : {TrajectoryKind::FigureEight, TrajectoryKind::Line, TrajectoryKind::Hover,
                 TrajectoryKind::WaypointList}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw std::invalid_argument("trajectory: unknown kind '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  require(period > 0.0, "trajectory", "period must be > 0");
  require(amplitude_x >= 0.0 && amplitude_y >= 0.0 && amplitude_z >= 0.0, "trajectory",
          "amplitudes must be >= 0");
  if (kind == TrajectoryKind::WaypointList) {
    require(!waypoints.empty(), "trajectory", "waypoint_list needs at least one waypoint");
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      require(waypoints[i].time > waypoints[i - 1].time, "trajectory",
              "waypoint times must be strictly increasing");
    }
  }
}

void FollowerKinematics::validate() const {
  require(max_yaw_rate > 0.0, "kinematics", "max_yaw_rate must be > 0");
  require(max_climb_rate > 0.0, "kinematics", "max_climb_rate must be > 0");
  require(max_speed > 0.0, "kinematics", "max_speed must be > 0");
  require(response_tau > 0.0, "kinematics", "response_tau must be > 0");
}

DetectorNoiseSpec DetectorNoiseSpec::noiseless() {
  DetectorNoiseSpec n;
  n.center_sigma = n.size_sigma = n.propeller_jitter = 0.0;
  n.dropout_prob = n.burst_prob = 0.0;
  n.false_positive_rate = 0.0;
  n.confidence_lo = n.confidence_hi = 1.0;
  return n;
}

void DetectorNoiseSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(center_sigma >= 0.0 && size_sigma >= 0.0 && propeller_jitter >= 0.0, "noise",
          "sigmas must be >= 0");
  require(prob(dropout_prob), "noise", "dropout_prob must lie in [0, 1]");
  require(prob(burst_prob), "noise", "burst_prob must lie in [0, 1]");
  require(burst_max_len >= 0, "noise", "burst_max_len must be >= 0");
  require(false_positive_rate >= 0.0, "noise", "false_positive_rate must be >= 0");
  require(prob(confidence_lo) && prob(confidence_hi) && confidence_lo <= confidence_hi, "noise",
          "confidence range must satisfy 0 <= lo <= hi <= 1");
  require(prob(false_positive_confidence_lo) && prob(false_positive_confidence_hi) &&
              false_positive_confidence_lo <= false_positive_confidence_hi,
          "noise", "false positive confidence range must satisfy 0 <= lo <= hi <= 1");
}

WorldState WorldState::initial(const Pose3D& target, const Pose3D& follower) {
  WorldState s;
  s.target = target;
  s.follower = follower;
  s.follower.yaw = wrap_angle(follower.yaw);
  s.follower_height_ref = follower.z;
  s.follower_yaw_ref = s.follower.yaw;
  s.true_distance = distance(target, follower);
  return s;
}

Pose3D target_pose(const TrajectorySpec& spec, double t) {
  const Pose3D& c = spec.center;
  const double w = 2.0 * std::numbers::pi / spec.period;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

  switch (spec.kind) {
    case TrajectoryKind::FigureEight:
      offset = {spec.amplitude_x * std::sin(w * t), spec.amplitude_y * std::sin(2.0 * w * t),
                spec.amplitude_z * std::sin(w * t)};
      velocity = {spec.amplitude_x * w * std::cos(w * t),
                  spec.amplitude_y * 2.0 * w * std::cos(2.0 * w * t)};
      break;
    case TrajectoryKind::Line:
      offset = Eigen::Vector3d(spec.amplitude_x, spec.amplitude_y, spec.amplitude_z) * std::sin(w * t);
      velocity = Eigen::Vector2d(spec.amplitude_x, spec.amplitude_y) * w * std::cos(w * t);
      break;
    case TrajectoryKind::Hover:
      break;
    case TrajectoryKind::WaypointList: {
      const auto& wp = spec.waypoints;
      if (t <= wp.front().time) {
        return wp.front().pose;
      }
      if (t >= wp.back().time) {
        return wp.back().pose;
      }
      const auto it = std::upper_bound(wp.begin(), wp.end(), t,
                                       [](double v, const Waypoint& p) { return v < p.time; });
      const Waypoint& b = *it;
      const Waypoint& a = *(it - 1);
      const double s = (t - a.time) / (b.time - a.time);
      const Eigen::Vector3d p = (1.0 - s) * a.pose.position() + s * b.pose.position();
      const Eigen::Vector3d d = b.pose.position() - a.pose.position();
      const double yaw = d.head<2>().norm() > 1e-12 ? std::atan2(d.y(), d.x()) : a.pose.yaw;
      return {p.x(), p.y(), p.z(), wrap_angle(yaw)};
    }
  }

  const double yaw = velocity.norm() > 1e-12 ? std::atan2(velocity.y(), velocity.x()) : c.yaw;
  return {c.x + offset.x(), c.y + offset.y(), c.z + offset.z(), wrap_angle(yaw)};
}

WorldState step_follower(const WorldState& state, const ServoCommand& cmd,
                         const FollowerKinematics& kin, double dt, double dtheta_max) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_follower: dt must be > 0");
  }
  WorldState next = state;
  next.follower_yaw_ref = wrap_angle(state.follower_yaw_ref + cmd.dpsi);
  next.follower_height_ref = state.follower_height_ref + cmd.dh;

  const double yaw_error = wrap_angle(next.follower_yaw_ref - state.follower.yaw);
  next.follower.yaw = wrap_angle(
      state.follower.yaw + lag_step(yaw_error, dt, kin.response_tau, kin.max_yaw_rate * dt));

  const double height_error = next.follower_height_ref - state.follower.z;
  next.follower.z += lag_step(height_error, dt, kin.response_tau, kin.max_climb_rate * dt);

  const double speed_ref = std::clamp(cmd.dtheta / dtheta_max, -1.0, 1.0) * kin.max_speed;
  next.follower_speed = std::clamp(
      state.follower_speed +
          lag_step(speed_ref - state.follower_speed, dt, kin.response_tau, 2.0 * kin.max_speed),
      -kin.max_speed, kin.max_speed);
  next.follower.x += next.follower_speed * dt * std::cos(next.follower.yaw);
  next.follower.y += next.follower_speed * dt * std::sin(next.follower.yaw);

  next.true_distance = distance(next.target, next.follower);
  return next;
}

WorldState advance_world(const WorldState& state, const TrajectorySpec& trajectory,
                         const ServoCommand& cmd, const FollowerKinematics& kin, double dt,
                         double dtheta_max) {
  WorldState next = step_follower(state, cmd, kin, dt, dtheta_max);
  next.frame = state.frame + 1;
  next.t = static_cast<double>(next.frame) * dt;
  next.target = target_pose(trajectory, next.t);
  next.true_distance = distance(next.target, next.follower);
  return next;
}

bool frame_dropped(const DetectorNoiseSpec& noise, long frame) {
  if (noise.dropout_prob > 0.0) {
    auto rng = frame_rng(noise.seed, frame, kDropout);
    if (std::bernoulli_distribution(noise.dropout_prob)(rng)) {
      return true;
    }
  }
  if (noise.burst_prob > 0.0 && noise.burst_max_len > 0) {
    for (long start = std::max(0L, frame - noise.burst_max_len + 1); start <= frame; ++start) {
      auto rng = frame_rng(noise.seed, start, kBurst);
      if (!std::bernoulli_distribution(noise.burst_prob)(rng)) {
        continue;
      }
      const int len = std::uniform_int_distribution<int>(1, noise.burst_max_len)(rng);
      if (frame - start < len) {
        return true;
      }
    }
  }
  return false;
}

std::vector<Detection> sense(const WorldState& state, const DetectorNoiseSpec& noise,
                             const CameraModel& cam, double target_extent) {
  std::vector<Detection> out;
  const auto truth = project_target(state.target, state.follower, target_extent, cam);

  if (truth && !frame_dropped(noise, state.frame)) {
    auto rng = frame_rng(noise.seed, state.frame, kBox);
    BoundingBox b = *truth;
    b.xc += gaussian(rng, noise.center_sigma);
    b.yc += gaussian(rng, noise.center_sigma);
    b.w += gaussian(rng, noise.size_sigma) + uniform(rng, -noise.propeller_jitter, noise.propeller_jitter);
    b.h += gaussian(rng, noise.size_sigma) + uniform(rng, -noise.propeller_jitter, noise.propeller_jitter);
    b.w = std::max(b.w, 1.0);
    b.h = std::max(b.h, 1.0);
    out.push_back({b, uniform(rng, noise.confidence_lo, noise.confidence_hi), state.frame, kUavClass});
  }

  if (noise.false_positive_rate > 0.0) {
    auto rng = frame_rng(noise.seed, state.frame, kClutter);
    const int count = std::poisson_distribution<int>(noise.false_positive_rate)(rng);
    const double nominal = state.true_distance > 0.0
                               ? cam.focal_px() * target_extent / state.true_distance
                               : cam.focal_px() * target_extent;
    for (int i = 0; i < count; ++i) {
      BoundingBox b;
      b.xc = uniform(rng, 0.0, cam.width_px());
      b.yc = uniform(rng, 0.0, cam.height_px());
      b.w = std::max(1.0, nominal * uniform(rng, 0.5, 1.5));
      b.h = std::max(1.0, nominal * uniform(rng, 0.5, 1.5));
      out.push_back({b,
                     uniform(rng, noise.false_positive_confidence_lo,
                             noise.false_positive_confidence_hi),
                     state.frame, kUavClass});
    }
  }
  return out;
}

}  // namespace uavfollow
