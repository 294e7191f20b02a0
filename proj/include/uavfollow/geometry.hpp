#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>

#include <Eigen/Core>

namespace uavfollow {

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Axis-aligned box in pixel coordinates, stored in center-size form.
struct BoundingBox {
  double xc = 0.0;
  double yc = 0.0;
  double w = 1.0;
  double h = 1.0;

  static BoundingBox from_corners(double x0, double y0, double x1, double y1) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
  }

  double left() const { return xc - 0.5 * w; }
  double top() const { return yc - 0.5 * h; }
  double right() const { return xc + 0.5 * w; }
  double bottom() const { return yc + 0.5 * h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0.0 && h > 0.0; }

  Eigen::Vector4d as_vector() const { return {xc, yc, w, h}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline constexpr int kUavClass = 0;

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
  long frame = 0;
  int class_id = kUavClass;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Pinhole camera with square pixels; the focal length follows from the
/// horizontal field of view.
class CameraModel {
 public:
  CameraModel() : CameraModel(1280, 720, 85.0 * std::numbers::pi / 180.0) {}
  /// Throws std::invalid_argument unless the size is positive and 0 < hfov < pi.
  CameraModel(int width_px, int height_px, double hfov);

  int width_px() const { return width_px_; }
  int height_px() const { return height_px_; }
  double hfov() const { return hfov_; }
  double focal_px() const { return focal_px_; }

 private:
  int width_px_;
  int height_px_;
  double hfov_;
  double focal_px_;
};

/// World-frame pose. z is up; yaw is counter-clockwise from +x.
struct Pose3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  Eigen::Vector3d position() const { return {x, y, z}; }
};

double distance(const Pose3D& a, const Pose3D& b);

/// Intersection over union; 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Box center divided by the image size, after clamping into the image.
std::pair<double, double> normalize_center(const BoundingBox& box, const CameraModel& cam);

/// Projects a target sphere of diameter `target_extent` into the follower's
/// body-fixed camera. Image x grows to the right of the optical axis, image y
/// grows downward. Returns nullopt when the target is behind the image plane
/// or its center falls outside the image.
std::optional<BoundingBox> project_target(const Pose3D& target, const Pose3D& follower,
                                          double target_extent, const CameraModel& cam);

}  // namespace uavfollow
