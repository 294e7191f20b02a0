#include "uavfollow/tracker.hpp"

#include <algorithm>
#include <tuple>

namespace uavfollow {

Assignment associate(const Eigen::MatrixXd& iou_matrix, double gate_iou) {
  const auto n_tracks = static_cast<std::size_t>(iou_matrix.rows());
  const auto n_dets = static_cast<std::size_t>(iou_matrix.cols());

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t t = 0; t < n_tracks; ++t) {
    for (std::size_t d = 0; d < n_dets; ++d) {
      const double v = iou_matrix(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d));
      if (v > 0.0 && v >= gate_iou) {
        candidates.emplace_back(v, t, d);
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });

  std::vector<bool> track_used(n_tracks, false);
  std::vector<bool> det_used(n_dets, false);
  Assignment out;
  for (const auto& [v, t, d] : candidates) {
    if (track_used[t] || det_used[d]) {
      continue;
    }
    track_used[t] = true;
    det_used[d] = true;
    out.matches.emplace_back(t, d);
  }
  for (std::size_t t = 0; t < n_tracks; ++t) {
    if (!track_used[t]) out.unmatched_tracks.push_back(t);
  }
  for (std::size_t d = 0; d < n_dets; ++d) {
    if (!det_used[d]) out.unmatched_detections.push_back(d);
  }
  return out;
}

Assignment associate(std::span<const TrackState> tracks, std::span<const Detection> detections,
                     const KalmanConfig& cfg) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(tracks.size()),
                    static_cast<Eigen::Index>(detections.size()));
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const BoundingBox tb = box_of(tracks[t]);
    for (std::size_t d = 0; d < detections.size(); ++d) {
      m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = iou(tb, detections[d].box);
    }
  }
  return associate(m, cfg.gate_iou);
}

TrackerStep step_tracker(std::vector<TrackState> tracks, std::span<const Detection> detections,
                         const KalmanConfig& cfg) {
  for (auto& t : tracks) {
    t = predict(std::move(t), cfg);
  }

  TrackerStep out;
  out.assignment = associate(tracks, detections, cfg);
  for (const auto& [ti, di] : out.assignment.matches) {
    tracks[ti] = update(std::move(tracks[ti]), detections[di], cfg);
  }
  for (const std::size_t ti : out.assignment.unmatched_tracks) {
    tracks[ti].hits = 0;
  }

  std::erase_if(tracks, [&](const TrackState& t) {
    return t.confirmed ? t.frames_since_update > cfg.max_coast : t.frames_since_update > 0;
  });

  for (const std::size_t di : out.assignment.unmatched_detections) {
    if (detections[di].confidence >= cfg.spawn_confidence) {
      tracks.push_back(initiate(detections[di].box.as_vector(), cfg));
    }
  }

  const TrackState* best = nullptr;
  for (const auto& t : tracks) {
    if (t.confirmed && (best == nullptr || t.age > best->age)) {
      best = &t;
    }
  }
  if (best != nullptr) {
    out.primary = *best;
  }
  out.tracks = std::move(tracks);
  return out;
}

const std::optional<TrackState>& Tracker::step(std::span<const Detection> detections) {
  TrackerStep s = step_tracker(std::move(tracks_), detections, cfg_);
  tracks_ = std::move(s.tracks);
  primary_ = std::move(s.primary);
  last_ = std::move(s.assignment);
  return primary_;
}

}  // namespace uavfollow
