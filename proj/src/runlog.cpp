#include "uavfollow/runlog.hpp"

#include "uavfollow/csv.hpp"

namespace uavfollow {

namespace {

std::optional<double> opt(bool present, double v) {
  return present ? std::optional<double>(v) : std::nullopt;
}

bool flag(const csv::Table& t, std::size_t r, std::size_t c) {
  const long v = t.integer(r, c);
  if (v != 0 && v != 1) {
    throw csv::ParseError(t.source() + ":" + std::to_string(t.line_of(r)) + ": column '" +
                          t.header()[c] + "' must be 0 or 1");
  }
  return v == 1;
}

// All four cells present, or all four blank.
std::optional<BoundingBox> read_box(const csv::Table& t, std::size_t r, const std::size_t (&c)[4]) {
  int blanks = 0;
  for (auto col : c) blanks += t.empty_cell(r, col) ? 1 : 0;
  if (blanks == 4) return std::nullopt;
  if (blanks != 0) {
    throw csv::ParseError(t.source() + ":" + std::to_string(t.line_of(r)) +
                          ": box columns are partially blank");
  }
  BoundingBox b{t.number(r, c[0]), t.number(r, c[1]), t.number(r, c[2]), t.number(r, c[3])};
  if (!b.valid()) {
    throw csv::ParseError(t.source() + ":" + std::to_string(t.line_of(r)) +
                          ": box width and height must be > 0");
  }
  return b;
}

}  // namespace

const std::vector<std::string>& frame_log_header() {
  static const std::vector<std::string> header = {
      "frame",        "t",           "target_x",       "target_y",       "target_z",
      "follower_x",   "follower_y",  "follower_z",     "follower_yaw",   "true_distance",
      "gt_visible",   "gt_xc",       "gt_yc",          "gt_w",           "gt_h",
      "det_count",    "det_xc",      "det_yc",         "det_w",          "det_h",
      "det_conf",     "track_confirmed", "track_coasting", "est_xc",     "est_yc",
      "est_w",        "est_h"};
  return header;
}

void write_frame_log(const std::vector<FrameRecord>& rows, const std::filesystem::path& path) {
  csv::Writer w(path, frame_log_header());
  for (const auto& r : rows) {
    w << r.frame << r.t << r.target.x << r.target.y << r.target.z << r.follower.x << r.follower.y
      << r.follower.z << r.follower.yaw << r.true_distance;
    w << (r.gt ? 1 : 0);
    w << opt(r.gt.has_value(), r.gt ? r.gt->xc : 0) << opt(r.gt.has_value(), r.gt ? r.gt->yc : 0)
      << opt(r.gt.has_value(), r.gt ? r.gt->w : 0) << opt(r.gt.has_value(), r.gt ? r.gt->h : 0);
    w << r.det_count;
    const auto& d = r.best_detection;
    w << opt(d.has_value(), d ? d->box.xc : 0) << opt(d.has_value(), d ? d->box.yc : 0)
      << opt(d.has_value(), d ? d->box.w : 0) << opt(d.has_value(), d ? d->box.h : 0)
      << opt(d.has_value(), d ? d->confidence : 0);
    w << (r.track_confirmed ? 1 : 0) << (r.track_coasting ? 1 : 0);
    const auto& e = r.estimate;
    w << opt(e.has_value(), e ? e->xc : 0) << opt(e.has_value(), e ? e->yc : 0)
      << opt(e.has_value(), e ? e->w : 0) << opt(e.has_value(), e ? e->h : 0);
    w.end_row();
  }
}

std::vector<FrameRecord> read_frame_log(const std::filesystem::path& path) {
  const csv::Table t = csv::Table::read(path);
  const auto col = [&](const char* name) { return t.column({name}); };
  const std::size_t gt_cols[4] = {col("gt_xc"), col("gt_yc"), col("gt_w"), col("gt_h")};
  const std::size_t det_cols[4] = {col("det_xc"), col("det_yc"), col("det_w"), col("det_h")};
  const std::size_t est_cols[4] = {col("est_xc"), col("est_yc"), col("est_w"), col("est_h")};
  const std::size_t c_frame = col("frame"), c_t = col("t"), c_tx = col("target_x"),
                    c_ty = col("target_y"), c_tz = col("target_z"), c_fx = col("follower_x"),
                    c_fy = col("follower_y"), c_fz = col("follower_z"), c_fyaw = col("follower_yaw"),
                    c_dist = col("true_distance"), c_vis = col("gt_visible"),
                    c_count = col("det_count"), c_conf = col("det_conf"),
                    c_conf_track = col("track_confirmed"), c_coast = col("track_coasting");

  std::vector<FrameRecord> rows;
  rows.reserve(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    FrameRecord f;
    f.frame = t.integer(r, c_frame);
    f.t = t.number(r, c_t);
    f.target = {t.number(r, c_tx), t.number(r, c_ty), t.number(r, c_tz), 0.0};
    f.follower = {t.number(r, c_fx), t.number(r, c_fy), t.number(r, c_fz), t.number(r, c_fyaw)};
    f.true_distance = t.number(r, c_dist);
    const bool visible = flag(t, r, c_vis);
    f.gt = read_box(t, r, gt_cols);
    if (visible != f.gt.has_value()) {
      throw csv::ParseError(t.source() + ":" + std::to_string(t.line_of(r)) +
                            ": gt_visible disagrees with gt box columns");
    }
    f.det_count = static_cast<int>(t.integer(r, c_count));
    if (auto b = read_box(t, r, det_cols)) {
      f.best_detection = Detection{*b, t.number(r, c_conf), f.frame, kUavClass};
    }
    f.track_confirmed = flag(t, r, c_conf_track);
    f.track_coasting = flag(t, r, c_coast);
    f.estimate = read_box(t, r, est_cols);
    rows.push_back(f);
  }
  return rows;
}

void write_boxes(const BoxesByFrame& boxes, const std::filesystem::path& path) {
  csv::Writer w(path, {"frame", "xc", "yc", "w", "h"});
  for (const auto& [frame, list] : boxes) {
    for (const auto& b : list) {
      w << frame << b.xc << b.yc << b.w << b.h;
      w.end_row();
    }
  }
}

BoxesByFrame read_boxes(const std::filesystem::path& path) {
  const csv::Table t = csv::Table::read(path);
  const std::size_t c_frame = t.column({"frame"});
  const std::size_t cols[4] = {t.column({"xc", "gt_xc"}), t.column({"yc", "gt_yc"}),
                               t.column({"w", "gt_w"}), t.column({"h", "gt_h"})};
  BoxesByFrame out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const long frame = t.integer(r, c_frame);
    auto& list = out[frame];
    if (auto b = read_box(t, r, cols)) list.push_back(*b);
  }
  return out;
}

void write_detections(const DetectionsByFrame& dets, const std::filesystem::path& path) {
  csv::Writer w(path, {"frame", "xc", "yc", "w", "h", "confidence"});
  for (const auto& [frame, list] : dets) {
    for (const auto& d : list) {
      w << frame << d.box.xc << d.box.yc << d.box.w << d.box.h << d.confidence;
      w.end_row();
    }
  }
}

DetectionsByFrame read_detections(const std::filesystem::path& path) {
  const csv::Table t = csv::Table::read(path);
  const std::size_t c_frame = t.column({"frame"});
  const std::size_t cols[4] = {t.column({"xc", "det_xc"}), t.column({"yc", "det_yc"}),
                               t.column({"w", "det_w"}), t.column({"h", "det_h"})};
  const std::size_t c_conf = t.column({"confidence", "det_conf"});
  DetectionsByFrame out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const long frame = t.integer(r, c_frame);
    auto& list = out[frame];
    if (auto b = read_box(t, r, cols)) {
      const double conf = t.number(r, c_conf);
      if (conf < 0.0 || conf > 1.0) {
        throw csv::ParseError(t.source() + ":" + std::to_string(t.line_of(r)) +
                              ": confidence must lie in [0, 1]");
      }
      list.push_back({*b, conf, frame, kUavClass});
    }
  }
  return out;
}

}  // namespace uavfollow
