#include "uavfollow/pipeline.hpp"

#include <fstream>
#include <random>

#include "uavfollow/csv.hpp"

namespace uavfollow {

namespace {

std::optional<Detection> most_confident(const std::vector<Detection>& dets) {
  std::optional<Detection> best;
  for (const auto& d : dets) {
    if (!best || d.confidence > best->confidence) best = d;
  }
  return best;
}

}  // namespace

PursuitRun run_pursuit(const Scenario& scenario, const SvrModel* model) {
  scenario.validate();
  if (scenario.distance_source == DistanceSource::Svr && model == nullptr) {
    throw ConfigError("pursuit: distance source is svr but no SVR model was provided");
  }
  const CameraModel& cam = scenario.camera;
  const double dt = scenario.dt();

  PursuitRun run;
  Tracker tracker(scenario.kalman);
  WorldState state = WorldState::initial(target_pose(scenario.trajectory, 0.0), scenario.follower_start);

  const long frames = scenario.frame_count();
  run.frames.reserve(static_cast<std::size_t>(frames));
  for (long k = 0; k < frames; ++k) {
    const std::vector<Detection> dets = sense(state, scenario.noise, cam, scenario.target_extent);
    const auto& primary = tracker.step(dets);

    CommandRecord cr;
    cr.frame = state.frame;
    std::optional<BoundingBox> est;
    if (primary) {
      est = box_of(*primary);
      const auto [xn, yn] = normalize_center(*est, cam);
      cr.xc_norm = xn;
      cr.yc_norm = yn;
      switch (scenario.distance_source) {
        case DistanceSource::Svr: cr.d_svr = model->predict(*est); break;
        case DistanceSource::Truth: cr.d_svr = state.true_distance; break;
        case DistanceSource::Off: break;
      }
    }
    cr.cmd = servo_step(est, cr.d_svr, cam, scenario.servo);

    FrameRecord fr;
    fr.frame = state.frame;
    fr.t = state.t;
    fr.target = state.target;
    fr.follower = state.follower;
    fr.true_distance = state.true_distance;
    fr.gt = project_target(state.target, state.follower, scenario.target_extent, cam);
    fr.det_count = static_cast<int>(dets.size());
    fr.best_detection = most_confident(dets);
    fr.track_confirmed = primary.has_value();
    fr.track_coasting = primary && primary->coasting();
    fr.estimate = est;

    run.detections[state.frame] = dets;
    if (fr.gt) {
      run.ground_truth[state.frame] = {*fr.gt};
    } else {
      run.ground_truth[state.frame] = {};
    }
    run.tracks.push_back({state.frame, primary});
    run.commands.push_back(cr);
    run.frames.push_back(fr);

    state = advance_world(state, scenario.trajectory, cr.cmd, scenario.kinematics, dt,
                          scenario.servo.dtheta_max);
  }
  run.report = pursuit_report(run.frames, scenario.servo);
  return run;
}

PursuitRun run_pursuit_to_dir(const Scenario& scenario, const std::filesystem::path& out_dir) {
  std::optional<SvrModel> model;
  if (scenario.distance_source == DistanceSource::Svr) {
    if (!std::filesystem::exists(scenario.svr_model)) {
      throw ConfigError("pursuit: SVR model file not found: " + scenario.svr_model.string());
    }
    model = load_model(scenario.svr_model);
  }
  PursuitRun run = run_pursuit(scenario, model ? &*model : nullptr);

  std::filesystem::create_directories(out_dir);
  write_frame_log(run.frames, out_dir / "frames.csv");
  write_detections(run.detections, out_dir / "detections.csv");
  write_boxes(run.ground_truth, out_dir / "gt.csv");
  write_track_log(run.tracks, out_dir / "tracks.csv");
  write_command_log(run.commands, out_dir / "commands.csv");
  std::ofstream(out_dir / "report.txt", std::ios::binary | std::ios::trunc) << format_report(run.report);
  save_report_json(run.report, out_dir / "report.json");
  return run;
}

TrainingSet run_collect(const Scenario& scenario) {
  scenario.validate();
  const CameraModel& cam = scenario.camera;
  const CollectSpec& spec = scenario.collect;
  const double half_h = 0.5 * cam.hfov();
  const double half_v = std::atan(0.5 * cam.height_px() / cam.focal_px());

  std::mt19937_64 rng(scenario.seed ^ 0x636f6c6c656374ULL);
  std::uniform_real_distribution<double> range(spec.range_min, spec.range_max);
  std::uniform_real_distribution<double> bearing(-spec.bearing_fraction * half_h, spec.bearing_fraction * half_h);
  std::uniform_real_distribution<double> elevation(-spec.elevation_fraction * half_v,
                                                   spec.elevation_fraction * half_v);

  const Pose3D follower = scenario.follower_start;
  TrainingSet data;
  data.x.resize(spec.rows, 4);
  data.distance.resize(spec.rows);
  long filled = 0;
  long frame = 0;
  const long max_attempts = 100 * spec.rows + 1000;
  while (filled < spec.rows) {
    if (frame >= max_attempts) {
      throw std::runtime_error("collect: detector produced too few usable rows");
    }
    const double r = spec.range_min == spec.range_max ? spec.range_min : range(rng);
    const double b = bearing(rng);
    const double e = elevation(rng);
    // Bearing is measured from the optical axis, positive to the right.
    const double horiz = r * std::cos(e);
    const double world_angle = follower.yaw - b;
    Pose3D target{follower.x + horiz * std::cos(world_angle), follower.y + horiz * std::sin(world_angle),
                  follower.z + r * std::sin(e), 0.0};
    WorldState state = WorldState::initial(target, follower);
    state.frame = frame++;

    const auto truth = project_target(target, follower, scenario.target_extent, cam);
    if (!truth) continue;
    const auto dets = sense(state, scenario.noise, cam, scenario.target_extent);
    const Detection* best = nullptr;
    double best_iou = 0.5;
    for (const auto& d : dets) {
      const double v = iou(d.box, *truth);
      if (v >= best_iou) {
        best_iou = v;
        best = &d;
      }
    }
    if (best == nullptr) continue;
    data.x.row(filled) = features_of(best->box).transpose();
    data.distance(filled) = state.true_distance;
    ++filled;
  }
  return data;
}

SvrTrainOutcome run_svr_train(const TrainingSet& data, const std::vector<SvrConfig>& grid, int folds,
                              std::uint64_t seed) {
  SvrTrainOutcome out;
  out.search = grid_search_cv(data, grid, folds, seed);
  TrainResult final_fit = train_nu_svr(data, out.search.best);
  out.model = std::move(final_fit.model);
  out.training = std::move(final_fit.report);
  return out;
}

std::vector<SvrConfig> load_grid(const std::filesystem::path& path, const SvrConfig& base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path.string() + ": cannot open grid file");
  }
  SvrGrid grid{{base.C}, {base.nu}, {base.gamma}};
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& [key, _] : j.items()) {
      if (key != "C" && key != "nu" && key != "gamma") {
        throw ConfigError(path.string() + ": unknown field '" + key + "'");
      }
    }
    if (j.contains("C")) grid.C = j.at("C").get<std::vector<double>>();
    if (j.contains("nu")) grid.nu = j.at("nu").get<std::vector<double>>();
    if (j.contains("gamma")) grid.gamma = j.at("gamma").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto configs = grid.expand(base);
  if (configs.empty()) {
    throw ConfigError(path.string() + ": grid is empty");
  }
  for (const auto& c : configs) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return configs;
}

void write_cv_report(const SvrTrainOutcome& outcome, int folds, const std::filesystem::path& path) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : outcome.search.points) {
    nlohmann::json e = {{"C", p.config.C}, {"nu", p.config.nu}, {"gamma", p.config.gamma}};
    if (std::isfinite(p.cv_mse)) {
      e["cv_mse"] = p.cv_mse;
    } else {
      e["cv_mse"] = nullptr;
      e["failure"] = p.failure;
    }
    points.push_back(e);
  }
  const auto& b = outcome.search.best;
  const nlohmann::json j = {
      {"folds", folds},
      {"best", {{"C", b.C}, {"nu", b.nu}, {"gamma", b.gamma}}},
      {"cv_mse", outcome.search.cv_mse},
      {"cv_rmse", std::sqrt(outcome.search.cv_mse)},
      {"support_vectors", outcome.model.support_vectors().rows()},
      {"epsilon", outcome.model.epsilon()},
      {"iterations", outcome.training.iterations},
      {"kkt_residual", outcome.training.kkt_residual},
      {"points", points},
  };
  std::ofstream(path, std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
}

std::vector<TrackRecord> run_replay(const DetectionsByFrame& detections, const KalmanConfig& cfg) {
  std::vector<TrackRecord> out;
  if (detections.empty()) return out;
  Tracker tracker(cfg);
  const long first = detections.begin()->first;
  const long last = detections.rbegin()->first;
  static const std::vector<Detection> kNone;
  for (long f = first; f <= last; ++f) {
    const auto it = detections.find(f);
    out.push_back({f, tracker.step(it == detections.end() ? kNone : it->second)});
  }
  return out;
}

void write_track_log(const std::vector<TrackRecord>& rows, const std::filesystem::path& path) {
  csv::Writer w(path, {"frame", "est_xc", "est_yc", "est_w", "est_h", "est_vxc", "est_vyc", "est_vw",
                       "est_vh", "coasting"});
  for (const auto& r : rows) {
    w << r.frame;
    for (int i = 0; i < 8; ++i) {
      w << (r.track ? std::optional<double>(r.track->x_hat(i)) : std::nullopt);
    }
    if (r.track) {
      w << (r.track->coasting() ? 1 : 0);
    } else {
      w << std::string_view();
    }
    w.end_row();
  }
}

void write_command_log(const std::vector<CommandRecord>& rows, const std::filesystem::path& path) {
  csv::Writer w(path, {"frame", "xc_norm", "yc_norm", "d_svr", "dpsi", "dh", "dtheta"});
  for (const auto& r : rows) {
    w << r.frame << r.xc_norm << r.yc_norm << r.d_svr << r.cmd.dpsi << r.cmd.dh << r.cmd.dtheta;
    w.end_row();
  }
}

}  // namespace uavfollow
