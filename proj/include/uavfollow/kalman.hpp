#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "uavfollow/geometry.hpp"

namespace uavfollow {

/// Raised when the innovation covariance cannot be factored.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Constant-velocity filter configuration over the box state
/// [xc, yc, w, h, xc', yc', w', h']. Velocities are in pixels per unit of dt.
template <typename Scalar>
struct KalmanConfigT {
  using Mat8 = Eigen::Matrix<Scalar, 8, 8>;
  using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
  using Mat48 = Eigen::Matrix<Scalar, 4, 8>;

  Scalar dt = Scalar(0.05);
  Mat8 F = transition(Scalar(0.05));
  Mat48 H = observation();
  Mat8 Q = default_process_noise();
  Mat4 R = default_measurement_noise();
  Mat8 P0 = default_initial_covariance();
  Scalar gate_iou = Scalar(0.3);
  int max_coast = 20;
  int confirm_hits = 3;
  Scalar spawn_confidence = Scalar(0.5);
  Scalar min_size = Scalar(1);

  /// Defaults with F rebuilt for the given step.
  static KalmanConfigT with_dt(Scalar step) {
    KalmanConfigT cfg;
    cfg.dt = step;
    cfg.F = transition(step);
    return cfg;
  }

  static Mat8 transition(Scalar step) {
    Mat8 f = Mat8::Identity();
    f.template topRightCorner<4, 4>().diagonal().setConstant(step);
    return f;
  }

  static Mat48 observation() {
    Mat48 h = Mat48::Zero();
    h.template leftCols<4>().setIdentity();
    return h;
  }

  static Mat8 default_process_noise() {
    Mat8 q = Mat8::Zero();
    q.diagonal() << 4e-5, 4e-5, 4e-5, 4e-5, 0.4, 0.4, 0.4, 0.4;
    return q;
  }

  static Mat4 default_measurement_noise() {
    return Eigen::Matrix<Scalar, 4, 1>(1, 1, 10, 10).asDiagonal();
  }

  static Mat8 default_initial_covariance() {
    Mat8 p = Mat8::Zero();
    p.diagonal() << 10, 10, 10, 10, 100, 100, 100, 100;
    return p;
  }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("kalman: ") + what);
    };
    require(dt > 0, "dt must be > 0");
    require(gate_iou >= 0 && gate_iou <= 1, "gate_iou must lie in [0, 1]");
    require(max_coast >= 0, "max_coast must be >= 0");
    require(confirm_hits >= 1, "confirm_hits must be >= 1");
    require(min_size > 0, "min_size must be > 0");
    require(Q.isApprox(Q.transpose()), "Q must be symmetric");
    require(P0.isApprox(P0.transpose()), "P0 must be symmetric");
    require(R.isApprox(R.transpose()) && R.llt().info() == Eigen::Success,
            "R must be symmetric positive definite");
  }
};

template <typename Scalar>
struct TrackStateT {
  using Vec8 = Eigen::Matrix<Scalar, 8, 1>;
  using Mat8 = Eigen::Matrix<Scalar, 8, 8>;

  Vec8 x_hat = Vec8::Zero();
  Mat8 P = Mat8::Identity();
  int frames_since_update = 0;
  int age = 0;
  int hits = 0;  // consecutive updates
  bool confirmed = false;

  bool coasting() const { return frames_since_update > 0; }
};

using KalmanConfig = KalmanConfigT<double>;
using TrackState = TrackStateT<double>;

/// New track at the measurement with zero velocity.
template <typename Scalar>
TrackStateT<Scalar> initiate(const Eigen::Matrix<Scalar, 4, 1>& z, const KalmanConfigT<Scalar>& cfg) {
  TrackStateT<Scalar> t;
  t.x_hat.template head<4>() = z;
  t.P = cfg.P0;
  t.hits = 1;
  t.confirmed = cfg.confirm_hits <= 1;
  return t;
}

template <typename Scalar>
TrackStateT<Scalar> predict(TrackStateT<Scalar> t, const KalmanConfigT<Scalar>& cfg) {
  t.x_hat = cfg.F * t.x_hat;
  t.P = cfg.F * t.P * cfg.F.transpose() + cfg.Q;
  t.P = (Scalar(0.5) * (t.P + t.P.transpose())).eval();
  ++t.frames_since_update;
  ++t.age;
  return t;
}

/// Standard correction with P <- (I - K H) P followed by symmetrization.
/// Width and height are then floored at cfg.min_size.
template <typename Scalar>
TrackStateT<Scalar> update(TrackStateT<Scalar> t, const Eigen::Matrix<Scalar, 4, 1>& z,
                           const KalmanConfigT<Scalar>& cfg) {
  using Mat8 = typename TrackStateT<Scalar>::Mat8;
  const Eigen::Matrix<Scalar, 4, 1> innovation = z - cfg.H * t.x_hat;
  const Eigen::Matrix<Scalar, 4, 4> S = cfg.H * t.P * cfg.H.transpose() + cfg.R;
  const Eigen::LLT<Eigen::Matrix<Scalar, 4, 4>> llt(S);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("kalman: innovation covariance is not positive definite");
  }
  // K = P H^T S^-1, solved as S K^T = H P.
  const Eigen::Matrix<Scalar, 8, 4> K = llt.solve(cfg.H * t.P).transpose();
  if (!K.allFinite()) {
    throw NumericalError("kalman: non-finite gain");
  }
  t.x_hat += K * innovation;
  t.P = ((Mat8::Identity() - K * cfg.H) * t.P).eval();
  t.P = (Scalar(0.5) * (t.P + t.P.transpose())).eval();
  t.x_hat(2) = std::max(t.x_hat(2), cfg.min_size);
  t.x_hat(3) = std::max(t.x_hat(3), cfg.min_size);
  t.frames_since_update = 0;
  ++t.hits;
  if (t.hits >= cfg.confirm_hits) {
    t.confirmed = true;
  }
  return t;
}

template <typename Scalar>
TrackStateT<Scalar> update(TrackStateT<Scalar> t, const Detection& z, const KalmanConfigT<Scalar>& cfg) {
  return update(std::move(t), z.box.as_vector().template cast<Scalar>().eval(), cfg);
}

/// Box of the position block. Sizes are floored at one pixel so that coasted
/// tracks with shrinking size still form a valid box.
template <typename Scalar>
BoundingBox box_of(const TrackStateT<Scalar>& t) {
  return {static_cast<double>(t.x_hat(0)), static_cast<double>(t.x_hat(1)),
          std::max(1.0, static_cast<double>(t.x_hat(2))),
          std::max(1.0, static_cast<double>(t.x_hat(3)))};
}

}  // namespace uavfollow
