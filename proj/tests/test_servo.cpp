#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <uavfollow/servo.hpp>
#include <uavfollow/world.hpp>

namespace {

using namespace uavfollow;

ServoConfig wide_limits() {
  ServoConfig c;
  c.dpsi_max = 0.2;
  c.dh_max = 0.5;
  c.dtheta_max = 0.1;
  return c;
}

TEST(ServoConfigTest, Defaults) {
  const ServoConfig c;
  EXPECT_EQ(c.M, 0.6);
  EXPECT_EQ(c.N, 0.4);
  EXPECT_EQ(c.V, 9.0);
  EXPECT_EQ(c.W, 6.0);
  EXPECT_EQ(c.d_area_max, 15.0);
  EXPECT_EQ(c.dtheta_max, 0.1);
  EXPECT_NO_THROW(c.validate());
}

TEST(ServoConfigTest, RejectsMalformedBands) {
  ServoConfig c;
  c.N = 0.7;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ServoConfig{};
  c.M = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ServoConfig{};
  c.W = 10.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ServoConfig{};
  c.dpsi_max = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ServoConfig{};
  c.d_area_max = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Yaw, DeadbandAndEdges) {
  const ServoConfig c = wide_limits();
  EXPECT_EQ(yaw_command(0.5, c), 0.0);
  EXPECT_EQ(yaw_command(0.6, c), 0.0);
  EXPECT_EQ(yaw_command(0.4, c), 0.0);
  EXPECT_DOUBLE_EQ(yaw_command(1.0, c), -c.dpsi_max);
  EXPECT_DOUBLE_EQ(yaw_command(0.0, c), c.dpsi_max);
}

TEST(Yaw, ExactPiecewiseValuesAtBandEdges) {
  const ServoConfig c = wide_limits();
  const double above = std::nextafter(c.M, 1.0);
  EXPECT_DOUBLE_EQ(yaw_command(above, c), -c.dpsi_max * (2 * above - 1));
  const double below = std::nextafter(c.N, 0.0);
  EXPECT_DOUBLE_EQ(yaw_command(below, c), c.dpsi_max * (1 - 2 * below));
  // The jump at the edge is -dpsi_max (2M - 1).
  EXPECT_NEAR(yaw_command(above, c), -c.dpsi_max * (2 * c.M - 1), 1e-12);
}

TEST(Height, Examples) {
  const ServoConfig c = wide_limits();
  EXPECT_EQ(height_command(0.5, c), 0.0);
  EXPECT_DOUBLE_EQ(height_command(1.0, c), -c.dh_max);
  EXPECT_DOUBLE_EQ(height_command(0.7, c), -0.4 * c.dh_max);
  EXPECT_DOUBLE_EQ(height_command(0.0, c), c.dh_max);
}

TEST(Pitch, Examples) {
  const ServoConfig c = wide_limits();
  EXPECT_EQ(pitch_command(0.5 * (c.V + c.W), c), 0.0);
  EXPECT_EQ(pitch_command(c.V, c), 0.0);
  EXPECT_EQ(pitch_command(c.W, c), 0.0);
  EXPECT_DOUBLE_EQ(pitch_command(0.0, c), -c.dtheta_max);
  EXPECT_DOUBLE_EQ(pitch_command(c.V + c.d_area_max, c), c.dtheta_max);
  EXPECT_DOUBLE_EQ(pitch_command(c.V + 0.5 * c.d_area_max, c), 0.5 * c.dtheta_max);
  EXPECT_DOUBLE_EQ(pitch_command(3.0, c), -c.dtheta_max * (1 - 3.0 / c.W));
}

TEST(Pitch, ClampsFarBranch) {
  const ServoConfig c = wide_limits();
  EXPECT_EQ(pitch_command(c.V + 10 * c.d_area_max, c), c.dtheta_max);
}

TEST(ServoStep, CenteredInBandIsZero) {
  const CameraModel cam;
  const ServoConfig c = wide_limits();
  const ServoCommand cmd = servo_step(BoundingBox{640, 360, 40, 40}, 7.5, cam, c);
  EXPECT_EQ(cmd, ServoCommand{});
}

TEST(ServoStep, NoEstimateIsZero) {
  const CameraModel cam;
  EXPECT_EQ(servo_step(std::optional<BoundingBox>{}, 20.0, cam, wide_limits()), ServoCommand{});
  EXPECT_EQ(servo_step(static_cast<const TrackState*>(nullptr), 20.0, cam, wide_limits()), ServoCommand{});
}

TEST(ServoStep, SubstitutionExample) {
  const CameraModel cam;
  const ServoConfig c = wide_limits();
  const BoundingBox b{0.8 * 1280, 0.5 * 720, 30, 30};
  const ServoCommand cmd = servo_step(b, c.V + 0.5 * c.d_area_max, cam, c);
  EXPECT_NEAR(cmd.dpsi, -0.6 * c.dpsi_max, 1e-12);
  EXPECT_EQ(cmd.dh, 0.0);
  EXPECT_NEAR(cmd.dtheta, 0.5 * c.dtheta_max, 1e-12);
}

TEST(ServoStep, MissingDistanceOnlyDisablesPitch) {
  const CameraModel cam;
  const ServoConfig c = wide_limits();
  const ServoCommand cmd = servo_step(BoundingBox{1200, 700, 30, 30}, std::nullopt, cam, c);
  EXPECT_LT(cmd.dpsi, 0.0);
  EXPECT_LT(cmd.dh, 0.0);
  EXPECT_EQ(cmd.dtheta, 0.0);
}

TEST(ServoStep, TrackOverloadUsesTrackBox) {
  const CameraModel cam;
  const ServoConfig c = wide_limits();
  TrackState t;
  t.x_hat << 1100, 100, 30, 30, 5, 5, 0, 0;
  EXPECT_EQ(servo_step(&t, 12.0, cam, c), servo_step(box_of(t), 12.0, cam, c));
}

TEST(ServoProperties, SaturationOverRandomInputs) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), d(0.0, 200.0);
  const ServoConfig c = wide_limits();
  for (int k = 0; k < 20000; ++k) {
    EXPECT_LE(std::abs(yaw_command(u(rng), c)), c.dpsi_max);
    EXPECT_LE(std::abs(height_command(u(rng), c)), c.dh_max);
    EXPECT_LE(std::abs(pitch_command(d(rng), c)), c.dtheta_max);
  }
}

TEST(ServoProperties, YawScalesWithMaximum) {
  ServoConfig a = wide_limits();
  ServoConfig b = a;
  b.dpsi_max *= 2.0;
  for (double x = 0.0; x <= 1.0; x += 0.01) {
    EXPECT_DOUBLE_EQ(yaw_command(x, b), 2.0 * yaw_command(x, a));
  }
}

TEST(ServoProperties, MagnitudeMonotoneOutsideDeadband) {
  const ServoConfig c = wide_limits();
  double prev = 0.0;
  for (double x = c.M + 1e-6; x <= 1.0; x += 0.001) {
    const double m = std::abs(yaw_command(x, c));
    EXPECT_GE(m, prev);
    prev = m;
  }
  prev = 0.0;
  for (double x = c.N - 1e-6; x >= 0.0; x -= 0.001) {
    const double m = std::abs(height_command(x, c));
    EXPECT_GE(m, prev);
    prev = m;
  }
  prev = 0.0;
  for (double d = c.V + 1e-6; d <= c.V + 2 * c.d_area_max; d += 0.01) {
    const double m = std::abs(pitch_command(d, c));
    EXPECT_GE(m, prev);
    prev = m;
  }
  prev = 0.0;
  for (double d = c.W - 1e-6; d >= 0.0; d -= 0.01) {
    const double m = std::abs(pitch_command(d, c));
    EXPECT_GE(m, prev);
    prev = m;
  }
}

// A static target off to the right and below must end up inside the deadband.
TEST(ServoClosedLoop, CentersStaticOffsetTarget) {
  const CameraModel cam;
  const ServoConfig c;
  const FollowerKinematics kin;
  const double dt = 0.05;
  const Pose3D target{10.0, -4.0, 3.5, 0.0};
  WorldState s = WorldState::initial(target, {0.0, 0.0, 5.0, 0.0});
  auto box = project_target(target, s.follower, 0.8, cam);
  ASSERT_TRUE(box.has_value());
  auto [x0, y0] = normalize_center(*box, cam);
  ASSERT_GT(x0, c.M);
  ASSERT_GT(y0, c.M);

  int centered_at = -1;
  for (int k = 0; k < 100; ++k) {
    box = project_target(target, s.follower, 0.8, cam);
    ASSERT_TRUE(box.has_value()) << "lost at frame " << k;
    auto [xn, yn] = normalize_center(*box, cam);
    if (xn <= c.M && xn >= c.N && yn <= c.M && yn >= c.N) {
      centered_at = k;
      break;
    }
    s = step_follower(s, servo_step(box, std::nullopt, cam, c), kin, dt, c.dtheta_max);
  }
  EXPECT_GE(centered_at, 0);
}

}  // namespace
