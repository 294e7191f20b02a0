#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "uavfollow/metrics.hpp"
#include "uavfollow/runlog.hpp"
#include "uavfollow/scenario.hpp"
#include "uavfollow/svr.hpp"
#include "uavfollow/tracker.hpp"

namespace uavfollow {

/// Per-frame servo inputs and outputs (commands.csv).
struct CommandRecord {
  long frame = 0;
  std::optional<double> xc_norm;
  std::optional<double> yc_norm;
  std::optional<double> d_svr;
  ServoCommand cmd;
};

/// Primary-track output (tracks.csv).
struct TrackRecord {
  long frame = 0;
  std::optional<TrackState> track;
};

struct PursuitRun {
  std::vector<FrameRecord> frames;
  std::vector<CommandRecord> commands;
  std::vector<TrackRecord> tracks;
  DetectionsByFrame detections;
  BoxesByFrame ground_truth;
  PursuitReport report;
};

/// Closed loop at scenario.rate: sense, track, estimate distance, servo,
/// move the follower. `model` is required when the distance source is svr.
PursuitRun run_pursuit(const Scenario& scenario, const SvrModel* model);

/// Loads the model named by the scenario when needed, runs the loop and
/// writes frames.csv, detections.csv, gt.csv, tracks.csv, commands.csv,
/// report.txt and report.json into `out_dir`.
PursuitRun run_pursuit_to_dir(const Scenario& scenario, const std::filesystem::path& out_dir);

/// SVR training rows from a seeded range/bearing sweep with the scenario's
/// detector noise. Rows whose target the detector misses are redrawn.
TrainingSet run_collect(const Scenario& scenario);

struct SvrTrainOutcome {
  GridSearchResult search;
  SvrModel model;
  TrainingReport training;
};

SvrTrainOutcome run_svr_train(const TrainingSet& data, const std::vector<SvrConfig>& grid, int folds,
                              std::uint64_t seed);

/// grid file: {"C": [...], "nu": [...], "gamma": [...]}; missing lists take
/// the scenario's single value.
std::vector<SvrConfig> load_grid(const std::filesystem::path& path, const SvrConfig& base);

void write_cv_report(const SvrTrainOutcome& outcome, int folds, const std::filesystem::path& path);

/// Tracker only over logged detections, for every frame between the first
/// and last frame in the log.
std::vector<TrackRecord> run_replay(const DetectionsByFrame& detections, const KalmanConfig& cfg);

void write_track_log(const std::vector<TrackRecord>& rows, const std::filesystem::path& path);
void write_command_log(const std::vector<CommandRecord>& rows, const std::filesystem::path& path);

}  // namespace uavfollow
