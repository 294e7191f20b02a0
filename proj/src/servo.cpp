#include "uavfollow/servo.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace uavfollow {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw std::invalid_argument("servo: " + what);
  }
}

// Shared shape of the yaw and height laws.
double centering_law(double v, double max, double M, double N) {
  if (v > M) {
    return -max * (2.0 * v - 1.0);
  }
  if (v < N) {
    return max * (1.0 - 2.0 * v);
  }
  return 0.0;
}

}  // namespace

void ServoConfig::validate() const {
  require(dpsi_max > 0.0, "dpsi_max must be > 0");
  require(dh_max > 0.0, "dh_max must be > 0");
  require(dtheta_max > 0.0, "dtheta_max must be > 0");
  require(d_area_max > 0.0, "d_area_max must be > 0");
  require(N >= 0.0 && N < M && M <= 1.0, "deadband needs 0 <= N < M <= 1");
  require(W > 0.0 && W < V, "distance band needs 0 < W < V");
}

double yaw_command(double xc_norm, const ServoConfig& cfg) {
  return centering_law(xc_norm, cfg.dpsi_max, cfg.M, cfg.N);
}

double height_command(double yc_norm, const ServoConfig& cfg) {
  return centering_law(yc_norm, cfg.dh_max, cfg.M, cfg.N);
}

double pitch_command(double d_svr, const ServoConfig& cfg) {
  double cmd = 0.0;
  if (d_svr > cfg.V) {
    cmd = cfg.dtheta_max * (d_svr - cfg.V) / cfg.d_area_max;
  } else if (d_svr < cfg.W) {
    cmd = -cfg.dtheta_max * (1.0 - d_svr / cfg.W);
  }
  return std::clamp(cmd, -cfg.dtheta_max, cfg.dtheta_max);
}

ServoCommand servo_step(const std::optional<BoundingBox>& estimate, std::optional<double> d_svr,
                        const CameraModel& cam, const ServoConfig& cfg) {
  if (!estimate) {
    return {};
  }
  const auto [xn, yn] = normalize_center(*estimate, cam);
  ServoCommand cmd{yaw_command(xn, cfg), height_command(yn, cfg), 0.0};
  if (d_svr) {
    cmd.dtheta = pitch_command(*d_svr, cfg);
  }
  return cmd;
}

ServoCommand servo_step(const TrackState* estimate, std::optional<double> d_svr,
                        const CameraModel& cam, const ServoConfig& cfg) {
  if (estimate == nullptr) {
    return {};
  }
  return servo_step(std::optional<BoundingBox>(box_of(*estimate)), d_svr, cam, cfg);
}

}  // namespace uavfollow
