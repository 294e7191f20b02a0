#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>
#include <uavfollow/csv.hpp>
#include <uavfollow/metrics.hpp>

#include "oracles/brute_ap.hpp"

namespace {

using namespace uavfollow;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "uavfollow_test_metrics";
  fs::create_directories(dir);
  return dir / name;
}

Detection det(BoundingBox b, double conf) { return Detection{b, conf, 0, kUavClass}; }

TEST(Match, SingleHit) {
  const std::vector<BoundingBox> gt{{100, 100, 40, 40}};
  const std::vector<Detection> pred{det({101, 100, 40, 40}, 0.9)};
  ASSERT_GE(iou(gt[0], pred[0].box), 0.9);
  const auto m = match_detections(gt, pred, 0.5);
  EXPECT_EQ(m.tp, 1);
  EXPECT_EQ(m.fp, 0);
  EXPECT_EQ(m.fn, 0);
}

TEST(Match, NoPredictions) {
  const std::vector<BoundingBox> gt{{100, 100, 40, 40}};
  const auto m = match_detections(gt, {}, 0.5);
  EXPECT_EQ(m.tp, 0);
  EXPECT_EQ(m.fp, 0);
  EXPECT_EQ(m.fn, 1);
}

TEST(Match, DuplicateIsFalsePositive) {
  const std::vector<BoundingBox> gt{{100, 100, 40, 40}};
  const std::vector<Detection> pred{det({102, 100, 40, 40}, 0.7), det({100, 101, 40, 40}, 0.9)};
  const auto m = match_detections(gt, pred, 0.5);
  EXPECT_EQ(m.tp, 1);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.fn, 0);
  // The higher-confidence box claims the ground truth.
  ASSERT_EQ(m.scored.size(), 2u);
  EXPECT_EQ(m.scored[0].confidence, 0.9);
  EXPECT_TRUE(m.scored[0].is_tp);
  EXPECT_FALSE(m.scored[1].is_tp);
}

TEST(Match, BelowThresholdIsMiss) {
  const std::vector<BoundingBox> gt{{100, 100, 40, 40}};
  const std::vector<Detection> pred{det({130, 100, 40, 40}, 0.9)};
  const auto m = match_detections(gt, pred, 0.5);
  EXPECT_EQ(m.tp, 0);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.fn, 1);
}

TEST(Match, CountsStayConsistentOnRandomFrames) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(0, 300), size(10, 80), conf(0, 1);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<BoundingBox> gt;
    std::vector<Detection> pred;
    for (int k = count(rng); k > 0; --k) gt.push_back({pos(rng), pos(rng), size(rng), size(rng)});
    for (int k = count(rng); k > 0; --k)
      pred.push_back(det({pos(rng), pos(rng), size(rng), size(rng)}, conf(rng)));
    const auto m = match_detections(gt, pred, 0.3);
    EXPECT_LE(m.tp, static_cast<long>(std::min(gt.size(), pred.size())));
    EXPECT_EQ(m.tp + m.fp, static_cast<long>(pred.size()));
    EXPECT_EQ(m.tp + m.fn, static_cast<long>(gt.size()));
  }
}

TEST(PrecisionRecall, PublishedCounts) {
  const auto [p, r] = precision_recall(2866, 205, 646);
  EXPECT_DOUBLE_EQ(p, 2866.0 / 3071.0);  // 0.93325
  EXPECT_DOUBLE_EQ(r, 2866.0 / 3512.0);  // 0.81606
  EXPECT_EQ(std::lround(100 * p), 93);
  EXPECT_EQ(std::lround(100 * r), 82);
}

TEST(PrecisionRecall, EdgeCounts) {
  EXPECT_EQ(precision_recall(0, 0, 0), std::make_pair(0.0, 0.0));
  EXPECT_EQ(precision_recall(10, 0, 0), std::make_pair(1.0, 1.0));
  EXPECT_THROW(precision_recall(-1, 0, 0), std::invalid_argument);
}

TEST(AveragePrecision, Examples) {
  const std::vector<ScoredPrediction> one{{0.9, true}};
  EXPECT_EQ(average_precision(one, 1), 1.0);
  const std::vector<ScoredPrediction> tp_first{{0.9, true}, {0.8, false}};
  EXPECT_EQ(average_precision(tp_first, 1), 1.0);
  const std::vector<ScoredPrediction> fp_first{{0.9, false}, {0.8, true}};
  EXPECT_EQ(average_precision(fp_first, 1), 0.5);
}

TEST(AveragePrecision, EmptyAndInvalid) {
  EXPECT_EQ(average_precision({}, 5), 0.0);
  EXPECT_THROW(average_precision({}, 0), std::invalid_argument);
}

TEST(AveragePrecision, TiedConfidencesEnterTogether) {
  // Order within a tie must not matter.
  const std::vector<ScoredPrediction> a{{0.5, false}, {0.5, true}};
  const std::vector<ScoredPrediction> b{{0.5, true}, {0.5, false}};
  EXPECT_EQ(average_precision(a, 1), 0.5);
  EXPECT_EQ(average_precision(b, 1), 0.5);
}

std::vector<ScoredPrediction> random_scored(std::mt19937_64& rng, int n, bool ties) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> level(0, 4);
  std::vector<ScoredPrediction> out;
  for (int i = 0; i < n; ++i) out.push_back({ties ? level(rng) / 4.0 : u(rng), u(rng) < 0.6});
  return out;
}

std::vector<oracle::Scored> to_oracle(const std::vector<ScoredPrediction>& s) {
  std::vector<oracle::Scored> out;
  for (const auto& p : s) out.push_back({p.confidence, p.is_tp});
  return out;
}

TEST(AveragePrecision, MatchesBruteForceOracle) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> n(1, 10);
  for (int trial = 0; trial < 400; ++trial) {
    const auto s = random_scored(rng, n(rng), trial % 2 == 1);
    const long tps = std::count_if(s.begin(), s.end(), [](auto& p) { return p.is_tp; });
    const long total = tps + std::uniform_int_distribution<long>(tps == 0 ? 1 : 0, 3)(rng);
    EXPECT_NEAR(average_precision(s, total), oracle::brute_force_ap(to_oracle(s), total), 1e-12);
    EXPECT_NEAR(average_precision(s, total, ApInterpolation::ElevenPoint),
                oracle::brute_force_ap11(to_oracle(s), total), 1e-12);
  }
}

TEST(AveragePrecision, RankOnlyDependence) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_scored(rng, 12, trial % 3 == 0);
    auto t = s;
    for (auto& p : t) p.confidence = std::exp(3.0 * p.confidence) - 7.0;
    EXPECT_DOUBLE_EQ(average_precision(s, 10), average_precision(t, 10));
  }
}

TEST(AveragePrecision, BoundedAndPerfectRanking) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_scored(rng, 15, false);
    const double ap = average_precision(s, 15);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
  }
  // All true positives ranked above all false positives, full coverage.
  const std::vector<ScoredPrediction> ranked{{0.9, true}, {0.8, true}, {0.3, false}, {0.2, false}};
  EXPECT_EQ(average_precision(ranked, 2), 1.0);
  EXPECT_EQ(average_precision(ranked, 2, ApInterpolation::ElevenPoint), 1.0);
  EXPECT_EQ(average_precision(ranked, 4), 0.5);
}

TEST(EvaluateDetections, AggregatesFrames) {
  BoxesByFrame gt{{0, {{100, 100, 40, 40}}}, {1, {{200, 100, 40, 40}}}, {2, {{300, 100, 40, 40}}}};
  DetectionsByFrame pred{{0, {det({100, 100, 40, 40}, 0.9)}},
                         {1, {det({500, 500, 40, 40}, 0.95)}},
                         {3, {det({10, 10, 40, 40}, 0.2)}}};
  const DetectionReport r = evaluate_detections(gt, pred, 0.5);
  EXPECT_EQ(r.frames, 4);
  EXPECT_EQ(r.tp, 1);
  EXPECT_EQ(r.fp, 2);
  EXPECT_EQ(r.fn, 2);
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0 / 3.0);
  // Ranked: FP 0.95, TP 0.9, FP 0.2 -> precision 1/2 at recall 1/3.
  EXPECT_DOUBLE_EQ(r.ap, 0.5 / 3.0);
}

TEST(EvaluateDetections, IdenticalSetsArePerfect) {
  BoxesByFrame gt;
  DetectionsByFrame pred;
  for (long f = 0; f < 50; ++f) {
    const BoundingBox b{100.0 + f, 200, 30, 30};
    gt[f].push_back(b);
    pred[f].push_back(det(b, 0.5 + 0.001 * f));
  }
  const auto r = evaluate_detections(gt, pred, 0.5);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.ap, 1.0);
}

TEST(EvaluateDetections, ReportJsonFields) {
  DetectionReport r{2866, 205, 646, 0.9333, 0.8161, 0.8, 0.5, 387};
  const auto path = scratch("report.json");
  save_report_json(r, path);
  const auto j = nlohmann::json::parse(std::ifstream(path));
  EXPECT_EQ(j.at("tp").get<long>(), 2866);
  EXPECT_EQ(j.at("fn").get<long>(), 646);
  EXPECT_EQ(j.at("mAP").get<double>(), 0.8);
  EXPECT_EQ(j.at("frames").get<long>(), 387);
  EXPECT_NE(format_report(r).find("mAP"), std::string::npos);
}

FrameRecord centered_record(long frame, double dist, bool confirmed = true) {
  FrameRecord f;
  f.frame = frame;
  f.t = 0.05 * frame;
  f.target = {dist, 0, 5, 0};
  f.follower = {0, 0, 5, 0};
  f.true_distance = dist;
  f.gt = BoundingBox{640, 360, 30, 30};
  f.det_count = 1;
  f.best_detection = det(*f.gt, 0.9);
  f.track_confirmed = confirmed;
  f.estimate = f.gt;
  return f;
}

TEST(PursuitReportTest, PerfectLog) {
  std::vector<FrameRecord> log;
  for (long f = 0; f < 100; ++f) log.push_back(centered_record(f, 7.5));
  const PursuitReport r = pursuit_report(log, ServoConfig{});
  EXPECT_EQ(r.frames, 100);
  EXPECT_EQ(r.acquisition_frame, 0);
  EXPECT_EQ(r.fov_fraction, 1.0);
  EXPECT_EQ(r.distance_band_fraction, 1.0);
  EXPECT_EQ(r.min_distance, 7.5);
  EXPECT_EQ(r.mean_center_error, 0.0);
  EXPECT_EQ(r.coast_frames, 0);
}

TEST(PursuitReportTest, TenFramesOutOfView) {
  std::vector<FrameRecord> log;
  for (long f = 0; f < 5; ++f) log.push_back(centered_record(f, 7.5, false));
  for (long f = 5; f < 105; ++f) {
    FrameRecord r = centered_record(f, 7.5);
    if (f >= 40 && f < 50) {
      r.gt.reset();
      r.track_coasting = true;
    }
    log.push_back(r);
  }
  const PursuitReport r = pursuit_report(log, ServoConfig{});
  EXPECT_EQ(r.acquisition_frame, 5);
  EXPECT_DOUBLE_EQ(r.fov_fraction, 0.9);
  EXPECT_EQ(r.coast_frames, 10);
}

TEST(PursuitReportTest, MinDistanceMatchesScan) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(1.0, 30.0);
  std::vector<FrameRecord> log;
  for (long f = 0; f < 300; ++f) log.push_back(centered_record(f, u(rng), f > 20));
  double scan = log[0].true_distance;
  long band = 0, post = 0;
  for (const auto& f : log) {
    scan = f.true_distance < scan ? f.true_distance : scan;
    if (f.frame > 20) {
      ++post;
      band += (f.true_distance >= 6.0 && f.true_distance <= 9.0) ? 1 : 0;
    }
  }
  const PursuitReport r = pursuit_report(log, ServoConfig{});
  EXPECT_EQ(r.min_distance, scan);
  EXPECT_DOUBLE_EQ(r.distance_band_fraction, static_cast<double>(band) / post);
}

TEST(PursuitReportTest, CenterErrorAndNoAcquisition) {
  std::vector<FrameRecord> log;
  for (long f = 0; f < 10; ++f) {
    FrameRecord r = centered_record(f, 7.5);
    r.estimate->xc += 3.0;
    r.estimate->yc += 4.0;
    log.push_back(r);
  }
  EXPECT_DOUBLE_EQ(pursuit_report(log, ServoConfig{}).mean_center_error, 5.0);
  for (auto& r : log) r.track_confirmed = false;
  const auto none = pursuit_report(log, ServoConfig{});
  EXPECT_EQ(none.acquisition_frame, -1);
  EXPECT_EQ(none.fov_fraction, 0.0);
  EXPECT_EQ(pursuit_report({}, ServoConfig{}).frames, 0);
}

TEST(PursuitReportTest, LogRoundTripAndMalformedRow) {
  std::vector<FrameRecord> log;
  for (long f = 0; f < 20; ++f) log.push_back(centered_record(f, 6.0 + 0.1 * f));
  log[3].gt.reset();
  log[4].best_detection.reset();
  log[4].det_count = 0;
  const auto path = scratch("frames.csv");
  write_frame_log(log, path);
  const auto back = read_frame_log(path);
  ASSERT_EQ(back.size(), log.size());
  EXPECT_FALSE(back[3].gt.has_value());
  EXPECT_FALSE(back[4].best_detection.has_value());
  EXPECT_EQ(back[7].true_distance, log[7].true_distance);
  const auto a = pursuit_report(log, ServoConfig{});
  const auto b = pursuit_report(back, ServoConfig{});
  EXPECT_EQ(a.fov_fraction, b.fov_fraction);
  EXPECT_EQ(a.min_distance, b.min_distance);

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto pos = text.find("\n6,");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos + 1, 1, "six");
  std::ofstream(path, std::ios::trunc) << text;
  try {
    read_frame_log(path);
    FAIL() << "expected a parse error";
  } catch (const csv::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":8"), std::string::npos) << e.what();
  }
}

TEST(PursuitReportTest, ReportJsonFields) {
  std::vector<FrameRecord> log;
  for (long f = 0; f < 10; ++f) log.push_back(centered_record(f, 7.5));
  const auto path = scratch("pursuit.json");
  save_report_json(pursuit_report(log, ServoConfig{}), path);
  const auto j = nlohmann::json::parse(std::ifstream(path));
  for (const char* k : {"frames", "acquisition_frame", "fov_fraction", "min_distance",
                        "distance_band_fraction", "mean_center_error", "coast_frames"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

}  // namespace
