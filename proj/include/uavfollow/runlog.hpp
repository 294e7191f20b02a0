#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "uavfollow/geometry.hpp"

namespace uavfollow {

/// One row of frames.csv written by the pursuit loop.
struct FrameRecord {
  long frame = 0;
  double t = 0.0;
  Pose3D target;
  Pose3D follower;
  double true_distance = 0.0;
  std::optional<BoundingBox> gt;  // geometric projection, when in view
  int det_count = 0;
  std::optional<Detection> best_detection;  // highest confidence
  bool track_confirmed = false;
  bool track_coasting = false;
  std::optional<BoundingBox> estimate;  // primary track
};

const std::vector<std::string>& frame_log_header();
void write_frame_log(const std::vector<FrameRecord>& rows, const std::filesystem::path& path);
/// Throws csv::ParseError identifying the offending row.
std::vector<FrameRecord> read_frame_log(const std::filesystem::path& path);

using BoxesByFrame = std::map<long, std::vector<BoundingBox>>;
using DetectionsByFrame = std::map<long, std::vector<Detection>>;

/// frame,xc,yc,w,h
void write_boxes(const BoxesByFrame& boxes, const std::filesystem::path& path);
BoxesByFrame read_boxes(const std::filesystem::path& path);

/// frame,xc,yc,w,h,confidence. Also accepts frames.csv, where the det_*
/// columns carry at most one detection per frame.
void write_detections(const DetectionsByFrame& dets, const std::filesystem::path& path);
DetectionsByFrame read_detections(const std::filesystem::path& path);

}  // namespace uavfollow
