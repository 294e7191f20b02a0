#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

#include <json.hpp>

#include "uavfollow/geometry.hpp"
#include "uavfollow/kalman.hpp"
#include "uavfollow/servo.hpp"
#include "uavfollow/svr.hpp"
#include "uavfollow/world.hpp"

namespace uavfollow {

enum class DistanceSource { Svr, Truth, Off };

/// Range/bearing sweep used to generate SVR training rows.
struct CollectSpec {
  long rows = 10000;
  double range_min = 4.0;
  double range_max = 20.0;
  double bearing_fraction = 0.9;    // of the half horizontal FOV
  double elevation_fraction = 0.9;  // of the half vertical FOV
};

/// Everything a run needs; see docs/scenario.md for the file schema.
struct Scenario {
  CameraModel camera;
  double target_extent = 0.8;  // m
  TrajectorySpec trajectory;
  Pose3D follower_start{0.0, -8.0, 5.0, std::numbers::pi / 2};
  FollowerKinematics kinematics;
  DetectorNoiseSpec noise;
  KalmanConfig kalman;
  ServoConfig servo;
  SvrConfig svr;
  DistanceSource distance_source = DistanceSource::Svr;
  std::filesystem::path svr_model = "svr_model.json";
  CollectSpec collect;
  double duration = 120.0;  // s
  double rate = 20.0;       // Hz
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";

  double dt() const { return 1.0 / rate; }
  long frame_count() const;
  /// Overrides the detector seed as well.
  void set_seed(std::uint64_t s);
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Defaults merged with the document; unknown keys and invariant
/// violations raise ConfigError with the dotted field path.
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const Scenario& s);

}  // namespace uavfollow
