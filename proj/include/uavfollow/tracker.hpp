#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "uavfollow/kalman.hpp"

namespace uavfollow {

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track, detection)
  std::vector<std::size_t> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

/// Greedy best-first matching on IoU between track boxes and detections.
/// Pairs below cfg.gate_iou (or with no overlap at all) are never matched.
Assignment associate(std::span<const TrackState> tracks, std::span<const Detection> detections,
                     const KalmanConfig& cfg);

/// Same matching over a precomputed IoU matrix (rows are tracks).
Assignment associate(const Eigen::MatrixXd& iou_matrix, double gate_iou);

struct TrackerStep {
  std::vector<TrackState> tracks;
  std::optional<TrackState> primary;
  Assignment assignment;
};

/// One frame of the track lifecycle: predict, associate, correct, spawn
/// tracks from confident leftovers, drop stale ones. Tentative tracks are
/// dropped on their first miss; confirmed tracks coast for up to
/// cfg.max_coast frames. The primary estimate is the oldest confirmed track.
TrackerStep step_tracker(std::vector<TrackState> tracks, std::span<const Detection> detections,
                         const KalmanConfig& cfg);

/// Owns the track list across frames.
class Tracker {
 public:
  explicit Tracker(KalmanConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  /// Returns the primary estimate after this frame, if any.
  const std::optional<TrackState>& step(std::span<const Detection> detections);

  const std::vector<TrackState>& tracks() const { return tracks_; }
  const std::optional<TrackState>& primary() const { return primary_; }
  const Assignment& last_assignment() const { return last_; }
  const KalmanConfig& config() const { return cfg_; }

 private:
  KalmanConfig cfg_;
  std::vector<TrackState> tracks_;
  std::optional<TrackState> primary_;
  Assignment last_;
};

}  // namespace uavfollow
