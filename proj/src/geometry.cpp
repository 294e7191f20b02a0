#include "uavfollow/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace uavfollow {

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped <= -std::numbers::pi) {
    wrapped += kTwoPi;
  } else if (wrapped > std::numbers::pi) {
    wrapped -= kTwoPi;
  }
  return wrapped;
}

CameraModel::CameraModel(int width_px, int height_px, double hfov)
    : width_px_(width_px), height_px_(height_px), hfov_(hfov) {
  if (width_px <= 0 || height_px <= 0) {
    throw std::invalid_argument("camera: image size must be positive");
  }
  if (!(hfov > 0.0 && hfov < std::numbers::pi)) {
    throw std::invalid_argument("camera: hfov must lie in (0, pi)");
  }
  focal_px_ = 0.5 * width_px / std::tan(0.5 * hfov);
}

double distance(const Pose3D& a, const Pose3D& b) {
  return (a.position() - b.position()).norm();
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (ix <= 0.0 || iy <= 0.0) {
    return 0.0;
  }
  // Areas from the same corner arithmetic as the overlap, so iou(a, a) == 1.
  const double inter = ix * iy;
  const double area_a = (a.right() - a.left()) * (a.bottom() - a.top());
  const double area_b = (b.right() - b.left()) * (b.bottom() - b.top());
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::pair<double, double> normalize_center(const BoundingBox& box, const CameraModel& cam) {
  const double w = cam.width_px();
  const double h = cam.height_px();
  return {std::clamp(box.xc, 0.0, w) / w, std::clamp(box.yc, 0.0, h) / h};
}

std::optional<BoundingBox> project_target(const Pose3D& target, const Pose3D& follower,
                                          double target_extent, const CameraModel& cam) {
  if (!(target_extent > 0.0)) {
    throw std::invalid_argument("project_target: target_extent must be positive");
  }
  const Eigen::Vector3d rel = target.position() - follower.position();
  const double c = std::cos(follower.yaw);
  const double s = std::sin(follower.yaw);
  const double forward = c * rel.x() + s * rel.y();
  const double right = s * rel.x() - c * rel.y();
  const double up = rel.z();
  if (forward <= 0.0) {
    return std::nullopt;
  }
  const double f = cam.focal_px();
  const double range = rel.norm();
  BoundingBox box{f * (right / forward) + 0.5 * cam.width_px(),
                  f * (-up / forward) + 0.5 * cam.height_px(), f * target_extent / range,
                  f * target_extent / range};
  if (box.xc < 0.0 || box.xc > cam.width_px() || box.yc < 0.0 || box.yc > cam.height_px()) {
    return std::nullopt;
  }
  return box;
}

}  // namespace uavfollow
