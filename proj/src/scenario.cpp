#include "uavfollow/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace uavfollow {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Reads known keys from one object and rejects anything else.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }

  void done() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError(path_ + "." + key + ": unknown field");
      }
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const nlohmann::json& child(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Pose3D read_pose(const nlohmann::json& j, const std::string& path, Pose3D p) {
  Section s(j, path);
  s.get("x", p.x);
  s.get("y", p.y);
  s.get("z", p.z);
  s.get("yaw", p.yaw);
  s.done();
  return p;
}

nlohmann::json pose_json(const Pose3D& p) {
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}};
}

template <typename Fn>
void checked(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string distance_name(DistanceSource d) {
  switch (d) {
    case DistanceSource::Svr: return "svr";
    case DistanceSource::Truth: return "truth";
    case DistanceSource::Off: return "off";
  }
  return "svr";
}

}  // namespace

long Scenario::frame_count() const { return std::lround(duration * rate); }

void Scenario::set_seed(std::uint64_t s) {
  seed = s;
  noise.seed = s;
}

void Scenario::validate() const {
  if (!(rate > 0.0)) throw ConfigError("scenario.rate: must be > 0");
  if (!(duration > 0.0)) throw ConfigError("scenario.duration: must be > 0");
  if (!(target_extent > 0.0)) throw ConfigError("scenario.target_extent: must be > 0");
  checked("scenario.trajectory", [&] { trajectory.validate(); });
  checked("scenario.kinematics", [&] { kinematics.validate(); });
  checked("scenario.noise", [&] { noise.validate(); });
  checked("scenario.kalman", [&] { kalman.validate(); });
  checked("scenario.servo", [&] { servo.validate(); });
  checked("scenario.svr", [&] { svr.validate(); });
  if (collect.rows < 1) throw ConfigError("scenario.collect.rows: must be >= 1");
  if (!(collect.range_min > 0.0 && collect.range_min <= collect.range_max)) {
    throw ConfigError("scenario.collect: need 0 < range_min <= range_max");
  }
  if (!(collect.bearing_fraction >= 0.0 && collect.bearing_fraction < 1.0) ||
      !(collect.elevation_fraction >= 0.0 && collect.elevation_fraction < 1.0)) {
    throw ConfigError("scenario.collect: bearing/elevation fractions must lie in [0, 1)");
  }
}

Scenario scenario_from_json(const nlohmann::json& doc) {
  Scenario s;
  {
    Section root(doc, "scenario");
    if (root.has("camera")) {
      Section c(root.child("camera"), root.path("camera"));
      int w = s.camera.width_px();
      int h = s.camera.height_px();
      double fov_deg = s.camera.hfov() / kDeg;
      c.get("width_px", w);
      c.get("height_px", h);
      c.get("hfov_deg", fov_deg);
      c.done();
      checked("scenario.camera", [&] { s.camera = CameraModel(w, h, fov_deg * kDeg); });
    }
    root.get("target_extent", s.target_extent);

    if (root.has("trajectory")) {
      Section t(root.child("trajectory"), root.path("trajectory"));
      std::string kind(to_string(s.trajectory.kind));
      t.get("kind", kind);
      checked("scenario.trajectory.kind", [&] { s.trajectory.kind = trajectory_kind_from_string(kind); });
      t.get("amplitude_x", s.trajectory.amplitude_x);
      t.get("amplitude_y", s.trajectory.amplitude_y);
      t.get("amplitude_z", s.trajectory.amplitude_z);
      t.get("period", s.trajectory.period);
      if (t.has("center")) {
        s.trajectory.center = read_pose(t.child("center"), t.path("center"), s.trajectory.center);
      }
      if (t.has("waypoints")) {
        const auto& list = t.child("waypoints");
        if (!list.is_array()) throw ConfigError(t.path("waypoints") + ": expected an array");
        s.trajectory.waypoints.clear();
        for (std::size_t i = 0; i < list.size(); ++i) {
          const std::string p = t.path("waypoints") + "[" + std::to_string(i) + "]";
          Section w(list[i], p);
          Waypoint wp;
          w.get("x", wp.pose.x);
          w.get("y", wp.pose.y);
          w.get("z", wp.pose.z);
          w.get("yaw", wp.pose.yaw);
          w.get("t", wp.time);
          w.done();
          s.trajectory.waypoints.push_back(wp);
        }
      }
      t.done();
    }
    if (root.has("follower_start")) {
      s.follower_start = read_pose(root.child("follower_start"), root.path("follower_start"), s.follower_start);
    }
    if (root.has("kinematics")) {
      Section k(root.child("kinematics"), root.path("kinematics"));
      k.get("max_yaw_rate", s.kinematics.max_yaw_rate);
      k.get("max_climb_rate", s.kinematics.max_climb_rate);
      k.get("max_speed", s.kinematics.max_speed);
      k.get("response_tau", s.kinematics.response_tau);
      k.done();
    }
    if (root.has("noise")) {
      Section n(root.child("noise"), root.path("noise"));
      n.get("center_sigma", s.noise.center_sigma);
      n.get("size_sigma", s.noise.size_sigma);
      n.get("propeller_jitter", s.noise.propeller_jitter);
      n.get("dropout_prob", s.noise.dropout_prob);
      n.get("burst_prob", s.noise.burst_prob);
      n.get("burst_max_len", s.noise.burst_max_len);
      n.get("false_positive_rate", s.noise.false_positive_rate);
      n.get("confidence_lo", s.noise.confidence_lo);
      n.get("confidence_hi", s.noise.confidence_hi);
      n.get("false_positive_confidence_lo", s.noise.false_positive_confidence_lo);
      n.get("false_positive_confidence_hi", s.noise.false_positive_confidence_hi);
      n.done();
    }
    root.get("duration", s.duration);
    root.get("rate", s.rate);
    std::uint64_t seed = s.seed;
    root.get("seed", seed);
    s.set_seed(seed);

    // Kalman step defaults to one frame period.
    double q_pos = 4e-5, q_vel = 0.4, r_center = 1.0, r_size = 10.0, p0_pos = 10.0, p0_vel = 100.0;
    double dt = s.rate > 0.0 ? 1.0 / s.rate : 0.05;
    if (root.has("kalman")) {
      Section k(root.child("kalman"), root.path("kalman"));
      k.get("dt", dt);
      k.get("q_position", q_pos);
      k.get("q_velocity", q_vel);
      k.get("r_center", r_center);
      k.get("r_size", r_size);
      k.get("p0_position", p0_pos);
      k.get("p0_velocity", p0_vel);
      k.get("gate_iou", s.kalman.gate_iou);
      k.get("max_coast", s.kalman.max_coast);
      k.get("confirm_hits", s.kalman.confirm_hits);
      k.get("spawn_confidence", s.kalman.spawn_confidence);
      k.get("min_size", s.kalman.min_size);
      k.done();
    }
    s.kalman.dt = dt;
    s.kalman.F = KalmanConfig::transition(dt);
    s.kalman.Q.setZero();
    s.kalman.Q.diagonal() << q_pos, q_pos, q_pos, q_pos, q_vel, q_vel, q_vel, q_vel;
    s.kalman.R = Eigen::Vector4d(r_center, r_center, r_size, r_size).asDiagonal();
    s.kalman.P0.setZero();
    s.kalman.P0.diagonal() << p0_pos, p0_pos, p0_pos, p0_pos, p0_vel, p0_vel, p0_vel, p0_vel;

    if (root.has("servo")) {
      Section v(root.child("servo"), root.path("servo"));
      v.get("dpsi_max", s.servo.dpsi_max);
      v.get("dh_max", s.servo.dh_max);
      v.get("dtheta_max", s.servo.dtheta_max);
      v.get("M", s.servo.M);
      v.get("N", s.servo.N);
      v.get("V", s.servo.V);
      v.get("W", s.servo.W);
      v.get("d_area_max", s.servo.d_area_max);
      v.done();
    }
    if (root.has("svr")) {
      Section v(root.child("svr"), root.path("svr"));
      v.get("C", s.svr.C);
      v.get("nu", s.svr.nu);
      v.get("gamma", s.svr.gamma);
      v.get("max_iter", s.svr.max_iter);
      v.get("tol", s.svr.tol);
      v.done();
    }
    if (root.has("distance")) {
      Section d(root.child("distance"), root.path("distance"));
      std::string mode = distance_name(s.distance_source);
      std::string model = s.svr_model.string();
      d.get("source", mode);
      d.get("svr_model", model);
      d.done();
      if (mode == "svr") {
        s.distance_source = DistanceSource::Svr;
      } else if (mode == "truth") {
        s.distance_source = DistanceSource::Truth;
      } else if (mode == "off") {
        s.distance_source = DistanceSource::Off;
      } else {
        throw ConfigError(d.path("source") + ": expected svr, truth or off");
      }
      s.svr_model = model;
    }
    if (root.has("collect")) {
      Section c(root.child("collect"), root.path("collect"));
      c.get("rows", s.collect.rows);
      c.get("range_min", s.collect.range_min);
      c.get("range_max", s.collect.range_max);
      c.get("bearing_fraction", s.collect.bearing_fraction);
      c.get("elevation_fraction", s.collect.elevation_fraction);
      c.done();
    }
    std::string out = s.output_dir.string();
    root.get("output_dir", out);
    s.output_dir = out;
    root.done();
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open scenario");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json waypoints = nlohmann::json::array();
  for (const auto& w : s.trajectory.waypoints) {
    waypoints.push_back({{"x", w.pose.x}, {"y", w.pose.y}, {"z", w.pose.z}, {"yaw", w.pose.yaw}, {"t", w.time}});
  }
  const auto& k = s.kalman;
  return {
      {"camera", {{"width_px", s.camera.width_px()}, {"height_px", s.camera.height_px()},
                  {"hfov_deg", s.camera.hfov() / kDeg}}},
      {"target_extent", s.target_extent},
      {"trajectory", {{"kind", std::string(to_string(s.trajectory.kind))},
                      {"amplitude_x", s.trajectory.amplitude_x},
                      {"amplitude_y", s.trajectory.amplitude_y},
                      {"amplitude_z", s.trajectory.amplitude_z},
                      {"period", s.trajectory.period},
                      {"center", pose_json(s.trajectory.center)},
                      {"waypoints", waypoints}}},
      {"follower_start", pose_json(s.follower_start)},
      {"kinematics", {{"max_yaw_rate", s.kinematics.max_yaw_rate},
                      {"max_climb_rate", s.kinematics.max_climb_rate},
                      {"max_speed", s.kinematics.max_speed},
                      {"response_tau", s.kinematics.response_tau}}},
      {"noise", {{"center_sigma", s.noise.center_sigma},
                 {"size_sigma", s.noise.size_sigma},
                 {"propeller_jitter", s.noise.propeller_jitter},
                 {"dropout_prob", s.noise.dropout_prob},
                 {"burst_prob", s.noise.burst_prob},
                 {"burst_max_len", s.noise.burst_max_len},
                 {"false_positive_rate", s.noise.false_positive_rate},
                 {"confidence_lo", s.noise.confidence_lo},
                 {"confidence_hi", s.noise.confidence_hi},
                 {"false_positive_confidence_lo", s.noise.false_positive_confidence_lo},
                 {"false_positive_confidence_hi", s.noise.false_positive_confidence_hi}}},
      {"kalman", {{"dt", k.dt},
                  {"q_position", k.Q(0, 0)},
                  {"q_velocity", k.Q(4, 4)},
                  {"r_center", k.R(0, 0)},
                  {"r_size", k.R(2, 2)},
                  {"p0_position", k.P0(0, 0)},
                  {"p0_velocity", k.P0(4, 4)},
                  {"gate_iou", k.gate_iou},
                  {"max_coast", k.max_coast},
                  {"confirm_hits", k.confirm_hits},
                  {"spawn_confidence", k.spawn_confidence},
                  {"min_size", k.min_size}}},
      {"servo", {{"dpsi_max", s.servo.dpsi_max},
                 {"dh_max", s.servo.dh_max},
                 {"dtheta_max", s.servo.dtheta_max},
                 {"M", s.servo.M},
                 {"N", s.servo.N},
                 {"V", s.servo.V},
                 {"W", s.servo.W},
                 {"d_area_max", s.servo.d_area_max}}},
      {"svr", {{"C", s.svr.C}, {"nu", s.svr.nu}, {"gamma", s.svr.gamma},
               {"max_iter", s.svr.max_iter}, {"tol", s.svr.tol}}},
      {"distance", {{"source", distance_name(s.distance_source)}, {"svr_model", s.svr_model.string()}}},
      {"collect", {{"rows", s.collect.rows},
                   {"range_min", s.collect.range_min},
                   {"range_max", s.collect.range_max},
                   {"bearing_fraction", s.collect.bearing_fraction},
                   {"elevation_fraction", s.collect.elevation_fraction}}},
      {"duration", s.duration},
      {"rate", s.rate},
      {"seed", s.seed},
      {"output_dir", s.output_dir.string()},
  };
}

}  // namespace uavfollow
