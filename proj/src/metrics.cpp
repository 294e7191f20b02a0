#include "uavfollow/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace uavfollow {

MatchResult match_detections(std::span<const BoundingBox> gt, std::span<const Detection> pred,
                             double iou_threshold) {
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pred[a].confidence > pred[b].confidence;
  });

  MatchResult out;
  std::vector<bool> taken(gt.size(), false);
  for (const std::size_t p : order) {
    double best = -1.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(pred[p].box, gt[g]);
      if (v > best) {
        best = v;
        best_gt = g;
      }
    }
    const bool hit = best_gt < gt.size() && best >= iou_threshold;
    if (hit) {
      taken[best_gt] = true;
      ++out.tp;
    } else {
      ++out.fp;
    }
    out.scored.push_back({pred[p].confidence, hit});
  }
  out.fn = static_cast<long>(std::count(taken.begin(), taken.end(), false));
  return out;
}

std::pair<double, double> precision_recall(long tp, long fp, long fn) {
  if (tp < 0 || fp < 0 || fn < 0) {
    throw std::invalid_argument("precision_recall: counts must be nonnegative");
  }
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return {precision, recall};
}

double average_precision(std::span<const ScoredPrediction> predictions, long total_gt,
                         ApInterpolation mode) {
  if (total_gt <= 0) {
    throw std::invalid_argument("average_precision: total_gt must be > 0");
  }
  std::vector<ScoredPrediction> sorted(predictions.begin(), predictions.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });

  // PR points at the end of each confidence group.
  std::vector<double> recall;
  std::vector<double> precision;
  long tp = 0;
  long seen = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    tp += sorted[i].is_tp ? 1 : 0;
    ++seen;
    if (i + 1 == sorted.size() || sorted[i + 1].confidence != sorted[i].confidence) {
      recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
      precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
    }
  }
  if (recall.empty()) {
    return 0.0;
  }
  for (std::size_t k = precision.size() - 1; k > 0; --k) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }

  if (mode == ApInterpolation::ElevenPoint) {
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
      const double r = step / 10.0;
      const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
      sum += it == recall.end() ? 0.0 : precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / 11.0;
  }

  double ap = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev) * precision[k];
    prev = recall[k];
  }
  return ap;
}

DetectionReport evaluate_detections(const BoxesByFrame& gt, const DetectionsByFrame& pred,
                                    double iou_threshold, ApInterpolation mode) {
  std::set<long> frames;
  for (const auto& [f, _] : gt) frames.insert(f);
  for (const auto& [f, _] : pred) frames.insert(f);

  DetectionReport r;
  r.iou_threshold = iou_threshold;
  r.frames = static_cast<long>(frames.size());
  std::vector<ScoredPrediction> scored;
  static const std::vector<BoundingBox> kNoBoxes;
  static const std::vector<Detection> kNoDets;
  for (const long f : frames) {
    const auto g = gt.find(f);
    const auto p = pred.find(f);
    const MatchResult m = match_detections(g == gt.end() ? kNoBoxes : g->second,
                                           p == pred.end() ? kNoDets : p->second, iou_threshold);
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
    scored.insert(scored.end(), m.scored.begin(), m.scored.end());
  }
  std::tie(r.precision, r.recall) = precision_recall(r.tp, r.fp, r.fn);
  r.ap = r.tp + r.fn > 0 ? average_precision(scored, r.tp + r.fn, mode) : 0.0;
  return r;
}

std::string format_report(const DetectionReport& r) {
  std::ostringstream os;
  os << "frames:        " << r.frames << '\n'
     << "iou_threshold: " << r.iou_threshold << '\n'
     << "true_pos:      " << r.tp << '\n'
     << "false_pos:     " << r.fp << '\n'
     << "false_neg:     " << r.fn << '\n'
     << "precision:     " << r.precision << '\n'
     << "recall:        " << r.recall << '\n'
     << "mAP:           " << r.ap << '\n';
  return os.str();
}

void save_report_json(const DetectionReport& r, const std::filesystem::path& path) {
  const nlohmann::json j = {{"frames", r.frames},       {"iou_threshold", r.iou_threshold},
                            {"tp", r.tp},               {"fp", r.fp},
                            {"fn", r.fn},               {"precision", r.precision},
                            {"recall", r.recall},       {"mAP", r.ap}};
  std::ofstream(path, std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
}

PursuitReport pursuit_report(std::span<const FrameRecord> log, const ServoConfig& cfg) {
  PursuitReport r;
  r.frames = static_cast<long>(log.size());
  if (log.empty()) {
    return r;
  }
  r.min_distance = std::numeric_limits<double>::infinity();
  for (const auto& f : log) {
    r.min_distance = std::min(r.min_distance, f.true_distance);
  }

  const auto acq = std::find_if(log.begin(), log.end(),
                                [](const FrameRecord& f) { return f.track_confirmed; });
  if (acq == log.end()) {
    return r;
  }
  r.acquisition_frame = acq->frame;

  long post = 0, in_view = 0, in_band = 0, center_samples = 0;
  double center_error = 0.0;
  for (auto it = acq; it != log.end(); ++it) {
    ++post;
    in_view += it->gt ? 1 : 0;
    in_band += (it->true_distance >= cfg.W && it->true_distance <= cfg.V) ? 1 : 0;
    r.coast_frames += (it->track_confirmed && it->track_coasting) ? 1 : 0;
    if (it->gt && it->estimate) {
      center_error += std::hypot(it->gt->xc - it->estimate->xc, it->gt->yc - it->estimate->yc);
      ++center_samples;
    }
  }
  r.fov_fraction = static_cast<double>(in_view) / static_cast<double>(post);
  r.distance_band_fraction = static_cast<double>(in_band) / static_cast<double>(post);
  r.mean_center_error = center_samples > 0 ? center_error / static_cast<double>(center_samples) : 0.0;
  return r;
}

std::string format_report(const PursuitReport& r) {
  std::ostringstream os;
  os << "frames:                 " << r.frames << '\n'
     << "acquisition_frame:      " << r.acquisition_frame << '\n'
     << "fov_fraction:           " << r.fov_fraction << '\n'
     << "min_distance_m:         " << r.min_distance << '\n'
     << "distance_band_fraction: " << r.distance_band_fraction << '\n'
     << "mean_center_error_px:   " << r.mean_center_error << '\n'
     << "coast_frames:           " << r.coast_frames << '\n';
  return os.str();
}

void save_report_json(const PursuitReport& r, const std::filesystem::path& path) {
  const nlohmann::json j = {{"frames", r.frames},
                            {"acquisition_frame", r.acquisition_frame},
                            {"fov_fraction", r.fov_fraction},
                            {"min_distance", r.min_distance},
                            {"distance_band_fraction", r.distance_band_fraction},
                            {"mean_center_error", r.mean_center_error},
                            {"coast_frames", r.coast_frames}};
  std::ofstream(path, std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
}

}  // namespace uavfollow
