#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uavfollow/geometry.hpp"

namespace uavfollow {

/// Hyper-parameters of the nu-SVR.
///
/// C follows the per-sample convention: each dual variable lies in [0, C]
/// and the tube constraint is sum(alpha + alpha*) = C * nu * n. Dividing
/// every dual by n recovers the aggregate form where duals are bounded by
/// C / n.
struct SvrConfig {
  double C = 62.5;
  double nu = 0.09;
  double gamma = 0.50625;
  long max_iter = 10000000;
  double tol = 1e-6;

  void validate() const;
  friend bool operator==(const SvrConfig&, const SvrConfig&) = default;
};

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// Box features in the order [xc, yc, w, h].
inline Eigen::Vector4d features_of(const BoundingBox& box) { return box.as_vector(); }

template <typename DerivedA, typename DerivedB>
double rbf_kernel(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                  double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

/// Per-feature standardization to zero mean and unit variance. Constant
/// features keep a unit scale.
struct FeatureScaler {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d stddev = Eigen::Vector4d::Ones();

  static FeatureScaler fit(const FeatureMatrix& x);

  Eigen::Vector4d apply(const Eigen::Vector4d& raw) const {
    return (raw - mean).cwiseQuotient(stddev);
  }
  FeatureMatrix apply(const FeatureMatrix& raw) const;
};

struct TrainingSet {
  FeatureMatrix x;  // rows of [xc, yc, w, h], pixels
  Eigen::VectorXd distance;  // m

  static constexpr Eigen::Index kMinRows = 20;

  Eigen::Index size() const { return x.rows(); }
  void push_back(const BoundingBox& box, double d);
  TrainingSet subset(const std::vector<Eigen::Index>& rows) const;
  /// Throws std::invalid_argument when shapes disagree, n < kMinRows or a
  /// distance is not positive.
  void validate() const;
};

class SvrModel {
 public:
  SvrModel() = default;
  SvrModel(FeatureMatrix support_vectors, Eigen::VectorXd dual_coeffs, double bias, double epsilon,
           FeatureScaler scaler, SvrConfig config);

  /// bias + sum_i coeff_i * k(sv_i, standardize(features)).
  double predict(const Eigen::Vector4d& features) const;
  double predict(const BoundingBox& box) const { return predict(features_of(box)); }
  Eigen::VectorXd predict(const FeatureMatrix& rows) const;

  const FeatureMatrix& support_vectors() const { return support_vectors_; }  // standardized
  const Eigen::VectorXd& dual_coeffs() const { return dual_coeffs_; }
  double bias() const { return bias_; }
  double epsilon() const { return epsilon_; }
  const FeatureScaler& scaler() const { return scaler_; }
  const SvrConfig& config() const { return config_; }

 private:
  FeatureMatrix support_vectors_;
  Eigen::VectorXd dual_coeffs_;
  double bias_ = 0.0;
  double epsilon_ = 0.0;
  FeatureScaler scaler_;
  SvrConfig config_;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, double kkt_residual, long iterations)
      : std::runtime_error(what), kkt_residual_(kkt_residual), iterations_(iterations) {}
  double kkt_residual() const { return kkt_residual_; }
  long iterations() const { return iterations_; }

 private:
  double kkt_residual_;
  long iterations_;
};

struct TrainingReport {
  long iterations = 0;
  double kkt_residual = 0.0;
  /// 0.5 * beta' K beta - y' beta with beta = alpha - alpha*, evaluated in the
  /// standardized feature space.
  double objective = 0.0;
  Eigen::VectorXd alpha;       // lower-side duals, one per sample
  Eigen::VectorXd alpha_star;  // upper-side duals
};

struct TrainResult {
  SvrModel model;
  TrainingReport report;
};

/// Solves the nu-SVR dual by pairwise working-set optimization. Throws
/// TrainingError when the KKT residual is still above cfg.tol after
/// cfg.max_iter iterations.
TrainResult train_nu_svr(const TrainingSet& data, const SvrConfig& cfg);

inline SvrModel train(const TrainingSet& data, const SvrConfig& cfg) {
  return train_nu_svr(data, cfg).model;
}

double mean_squared_error(const SvrModel& model, const TrainingSet& data);

struct SvrGrid {
  std::vector<double> C;
  std::vector<double> nu;
  std::vector<double> gamma;

  /// Cartesian product in C-major order.
  std::vector<SvrConfig> expand(const SvrConfig& base) const;
};

struct GridPointResult {
  SvrConfig config;
  double cv_mse = 0.0;  // +inf when any fold failed
  std::string failure;
};

struct GridSearchResult {
  SvrConfig best;
  double cv_mse = 0.0;
  std::vector<GridPointResult> points;
};

/// Mean held-out MSE over `folds` contiguous folds of a seeded shuffle.
/// Throws TrainingError when the training fold fails.
double cross_validate(const TrainingSet& data, const SvrConfig& cfg, int folds, std::uint64_t seed);

/// Argmin of cross-validated MSE; ties go to smaller C, then smaller gamma,
/// then grid order. Throws std::runtime_error when every point failed.
GridSearchResult grid_search_cv(const TrainingSet& data, const std::vector<SvrConfig>& grid,
                                int folds, std::uint64_t seed = 0);

void save_model(const SvrModel& model, const std::filesystem::path& path);
SvrModel load_model(const std::filesystem::path& path);

/// CSV with header xc,yc,w,h,distance.
void save_training_set(const TrainingSet& data, const std::filesystem::path& path);
TrainingSet load_training_set(const std::filesystem::path& path);

}  // namespace uavfollow
