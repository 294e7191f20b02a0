#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uavfollow/geometry.hpp"
#include "uavfollow/runlog.hpp"
#include "uavfollow/servo.hpp"

namespace uavfollow {

struct ScoredPrediction {
  double confidence = 0.0;
  bool is_tp = false;
};

struct MatchResult {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::vector<ScoredPrediction> scored;
};

/// Greedy by descending confidence; each prediction takes the unmatched
/// ground truth of highest IoU when that IoU reaches the threshold.
MatchResult match_detections(std::span<const BoundingBox> gt, std::span<const Detection> pred,
                             double iou_threshold);

/// Zero for an empty denominator.
std::pair<double, double> precision_recall(long tp, long fp, long fn);

enum class ApInterpolation { AllPoint, ElevenPoint };

/// Area under the interpolated precision envelope. Predictions sharing a
/// confidence enter the curve together. Throws std::invalid_argument when
/// total_gt <= 0.
double average_precision(std::span<const ScoredPrediction> predictions, long total_gt,
                         ApInterpolation mode = ApInterpolation::AllPoint);

struct DetectionReport {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double ap = 0.0;  // single class, reported as mAP
  double iou_threshold = 0.5;
  long frames = 0;
};

DetectionReport evaluate_detections(const BoxesByFrame& gt, const DetectionsByFrame& pred,
                                    double iou_threshold,
                                    ApInterpolation mode = ApInterpolation::AllPoint);

std::string format_report(const DetectionReport& r);
void save_report_json(const DetectionReport& r, const std::filesystem::path& path);

struct PursuitReport {
  long frames = 0;
  long acquisition_frame = -1;  // first frame with a confirmed track, -1 if never
  double fov_fraction = 0.0;
  double min_distance = 0.0;
  double distance_band_fraction = 0.0;
  double mean_center_error = 0.0;  // px, estimate vs projected truth
  long coast_frames = 0;
};

/// Fractions are over frames from acquisition on; min_distance covers the
/// whole run. The distance band is [cfg.W, cfg.V].
PursuitReport pursuit_report(std::span<const FrameRecord> log, const ServoConfig& cfg);

std::string format_report(const PursuitReport& r);
void save_report_json(const PursuitReport& r, const std::filesystem::path& path);

}  // namespace uavfollow
