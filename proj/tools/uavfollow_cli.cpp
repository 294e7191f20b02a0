// Command-line driver: closed-loop pursuit, SVR data collection and
// training, detection evaluation and tracker replay.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uavfollow/metrics.hpp"
#include "uavfollow/pipeline.hpp"
#include "uavfollow/scenario.hpp"

namespace fs = std::filesystem;
using namespace uavfollow;

namespace {

Scenario scenario_or_default(const std::string& path, std::optional<std::uint64_t> seed) {
  Scenario s = path.empty() ? Scenario{} : load_scenario(path);
  if (seed) s.set_seed(*seed);
  s.validate();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-based UAV following simulator"};
  app.require_subcommand(0, 1);

  bool print_default = false;
  app.add_flag("--print-default-scenario", print_default, "Print the default scenario as JSON and exit");

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out;

  auto* pursuit = app.add_subcommand("pursuit", "Run the closed-loop figure-eight pursuit");
  std::string model_override;
  pursuit->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  pursuit->add_option("--seed", seed, "Override the scenario seed");
  pursuit->add_option("--out", out, "Output directory (default: scenario output_dir)");
  pursuit->add_option("--svr-model", model_override, "Override the SVR model path");

  auto* collect = app.add_subcommand("collect", "Generate SVR training rows (xc,yc,w,h,distance)");
  std::optional<long> rows;
  collect->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  collect->add_option("--seed", seed, "Override the scenario seed");
  collect->add_option("--rows", rows, "Number of rows")->check(CLI::PositiveNumber);
  collect->add_option("--out", out, "Output CSV path")->required();

  auto* train = app.add_subcommand("svr-train", "Grid search with k-fold CV, then fit the final model");
  std::string data_path, grid_path;
  int folds = 10;
  train->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--grid", grid_path, "Grid JSON {\"C\":[..],\"nu\":[..],\"gamma\":[..]}")
      ->check(CLI::ExistingFile);
  train->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1 << 30));
  train->add_option("--scenario", scenario_path, "Scenario JSON (base SVR settings)")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Fold shuffle seed");
  train->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  std::string gt_path, pred_path;
  double iou_threshold = 0.5;
  bool eleven = false;
  eval->add_option("--gt", gt_path, "Ground-truth CSV (frame,xc,yc,w,h)")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", pred_path, "Prediction CSV (frame,xc,yc,w,h,confidence)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--iou", iou_threshold, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  eval->add_flag("--eleven-point", eleven, "Use 11-point interpolated AP");
  eval->add_option("--out", out, "Output directory for eval_report.{txt,json}");

  auto* replay = app.add_subcommand("replay", "Run the tracker over a detection CSV");
  std::string det_path;
  replay->add_option("--detections", det_path, "Detection CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--scenario", scenario_path, "Scenario JSON (Kalman settings)")->check(CLI::ExistingFile);
  replay->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_default) {
      std::cout << scenario_to_json(Scenario{}).dump(2) << '\n';
      return 0;
    }
    if (*pursuit) {
      Scenario s = scenario_or_default(scenario_path, seed);
      if (!model_override.empty()) s.svr_model = model_override;
      const fs::path dir = out.empty() ? s.output_dir : fs::path(out);
      const PursuitRun run = run_pursuit_to_dir(s, dir);
      std::cout << format_report(run.report);
      return 0;
    }
    if (*collect) {
      Scenario s = scenario_or_default(scenario_path, seed);
      if (rows) s.collect.rows = *rows;
      s.validate();
      const TrainingSet data = run_collect(s);
      if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
      save_training_set(data, out);
      std::cout << "wrote " << data.size() << " rows to " << out << '\n';
      return 0;
    }
    if (*train) {
      const Scenario s = scenario_or_default(scenario_path, std::nullopt);
      const TrainingSet data = load_training_set(data_path);
      if (data.size() == 0) throw std::runtime_error(data_path + ": no data rows");
      const auto grid = grid_path.empty() ? std::vector<SvrConfig>{s.svr} : load_grid(grid_path, s.svr);
      const SvrTrainOutcome outcome = run_svr_train(data, grid, folds, seed.value_or(s.seed));
      fs::create_directories(out);
      save_model(outcome.model, fs::path(out) / "svr_model.json");
      write_cv_report(outcome, folds, fs::path(out) / "cv_report.json");
      const auto& b = outcome.search.best;
      std::cout << "best C=" << b.C << " nu=" << b.nu << " gamma=" << b.gamma
                << " cv_mse=" << outcome.search.cv_mse << " support_vectors="
                << outcome.model.support_vectors().rows() << '\n';
      return 0;
    }
    if (*eval) {
      const DetectionReport r =
          evaluate_detections(read_boxes(gt_path), read_detections(pred_path), iou_threshold,
                              eleven ? ApInterpolation::ElevenPoint : ApInterpolation::AllPoint);
      std::cout << format_report(r);
      if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream(fs::path(out) / "eval_report.txt", std::ios::binary | std::ios::trunc) << format_report(r);
        save_report_json(r, fs::path(out) / "eval_report.json");
      }
      return 0;
    }
    if (*replay) {
      const Scenario s = scenario_or_default(scenario_path, std::nullopt);
      const auto tracks = run_replay(read_detections(det_path), s.kalman);
      fs::create_directories(out);
      write_track_log(tracks, fs::path(out) / "tracks.csv");
      std::cout << "replayed " << tracks.size() << " frames\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
