#include "uavfollow/svr.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "uavfollow/csv.hpp"

namespace uavfollow {

namespace {

constexpr double kTau = 1e-12;
constexpr std::size_t kCacheBytes = std::size_t{256} << 20;

// LRU cache of kernel rows over standardized features.
class KernelRows {
 public:
  KernelRows(const FeatureMatrix& x, double gamma)
      : x_(x), gamma_(gamma),
        capacity_(std::max<std::size_t>(2, kCacheBytes / (sizeof(double) * std::max<Eigen::Index>(1, x.rows())))) {}

  const Eigen::VectorXd& row(Eigen::Index i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    Eigen::VectorXd r(x_.rows());
    const Eigen::RowVector4d xi = x_.row(i);
    for (Eigen::Index j = 0; j < x_.rows(); ++j) {
      r(j) = std::exp(-gamma_ * (x_.row(j) - xi).squaredNorm());
    }
    lru_.emplace_front(i, std::move(r));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  using Entry = std::pair<Eigen::Index, Eigen::VectorXd>;
  const FeatureMatrix& x_;
  double gamma_;
  std::size_t capacity_;
  std::list<Entry> lru_;
  std::unordered_map<Eigen::Index, std::list<Entry>::iterator> index_;
};

// Dual over 2n variables z = [alpha; alpha*] with signs s = [+1; -1]:
//   min 0.5 z'Qz + p'z,  Q_tu = s_t s_u K(t mod n, u mod n),  p = [-y; y]
//   s'z = 0,  1'z = C nu n,  0 <= z <= C.
// Working pairs are drawn from one sign class, which keeps both equalities.
// The gradient is held as G_t = p_t + s_t f_(t mod n) with f = K beta and
// beta = alpha - alpha*.
class NuSvrSolver {
 public:
  NuSvrSolver(const FeatureMatrix& x, const Eigen::VectorXd& y, const SvrConfig& cfg)
      : n_(x.rows()), y_(y), cfg_(cfg), kernel_(x, cfg.gamma), z_(Eigen::VectorXd::Zero(2 * n_)),
        f_(Eigen::VectorXd::Zero(n_)) {
    double budget = cfg.C * cfg.nu * static_cast<double>(n_) / 2.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double a = std::min(budget, cfg.C);
      z_(i) = z_(i + n_) = a;
      budget -= a;
    }
    // beta starts at zero, so f = 0.
  }

  void solve() {
    for (iterations_ = 0; iterations_ < cfg_.max_iter; ++iterations_) {
      Eigen::Index i = -1;
      Eigen::Index j = -1;
      residual_ = select_working_set(i, j);
      if (residual_ < cfg_.tol || j < 0) {
        return;
      }
      take_step(i, j);
    }
    Eigen::Index i = -1;
    Eigen::Index j = -1;
    residual_ = select_working_set(i, j);
    if (residual_ >= cfg_.tol && j >= 0) {
      throw TrainingError("nu-svr: no convergence after " + std::to_string(cfg_.max_iter) +
                              " iterations (KKT residual " + std::to_string(residual_) + ")",
                          residual_, iterations_);
    }
  }

  // Bias and tube half-width from the multipliers of the two equalities.
  std::pair<double, double> bias_and_epsilon() const {
    double r[2];
    for (int cls = 0; cls < 2; ++cls) {
      double ub = std::numeric_limits<double>::infinity();
      double lb = -std::numeric_limits<double>::infinity();
      double sum_free = 0.0;
      long n_free = 0;
      for (Eigen::Index k = 0; k < n_; ++k) {
        const Eigen::Index t = k + cls * n_;
        const double g = grad(t);
        if (at_upper(t)) {
          lb = std::max(lb, g);
        } else if (at_lower(t)) {
          ub = std::min(ub, g);
        } else {
          ++n_free;
          sum_free += g;
        }
      }
      r[cls] = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    }
    return {0.5 * (r[1] - r[0]), -0.5 * (r[0] + r[1])};
  }

  Eigen::VectorXd beta() const { return z_.head(n_) - z_.tail(n_); }
  Eigen::VectorXd alpha() const { return z_.head(n_); }
  Eigen::VectorXd alpha_star() const { return z_.tail(n_); }
  double objective() const {
    const Eigen::VectorXd b = beta();
    return 0.5 * b.dot(f_) - y_.dot(b);
  }
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  double sign(Eigen::Index t) const { return t < n_ ? 1.0 : -1.0; }
  Eigen::Index sample(Eigen::Index t) const { return t < n_ ? t : t - n_; }
  double grad(Eigen::Index t) const {
    const Eigen::Index k = sample(t);
    return t < n_ ? -y_(k) + f_(k) : y_(k) - f_(k);
  }
  bool at_upper(Eigen::Index t) const { return z_(t) >= cfg_.C; }
  bool at_lower(Eigen::Index t) const { return z_(t) <= 0.0; }

  // Maximal-violation first index per class, second-order choice of the
  // partner. Returns the KKT residual of the current point.
  double select_working_set(Eigen::Index& out_i, Eigen::Index& out_j) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double gmax_p = -kInf, gmax_p2 = -kInf, gmax_n = -kInf, gmax_n2 = -kInf;
    Eigen::Index ip = -1, in = -1;
    for (Eigen::Index t = 0; t < 2 * n_; ++t) {
      const double g = grad(t);
      if (t < n_) {
        if (!at_upper(t) && -g >= gmax_p) {
          gmax_p = -g;
          ip = t;
        }
      } else if (!at_lower(t) && g >= gmax_n) {
        gmax_n = g;
        in = t;
      }
    }

    const Eigen::VectorXd* kp = ip >= 0 ? &kernel_.row(sample(ip)) : nullptr;
    const Eigen::VectorXd* kn = in >= 0 ? &kernel_.row(sample(in)) : nullptr;

    Eigen::Index best = -1;
    double best_gain = kInf;
    for (Eigen::Index t = 0; t < 2 * n_; ++t) {
      const double g = grad(t);
      const Eigen::Index k = sample(t);
      if (t < n_) {
        if (at_lower(t)) continue;
        gmax_p2 = std::max(gmax_p2, g);
        const double diff = gmax_p + g;
        if (kp != nullptr && diff > 0.0) {
          double quad = 2.0 - 2.0 * (*kp)(k);
          if (quad <= 0.0) quad = kTau;
          const double gain = -(diff * diff) / quad;
          if (gain <= best_gain) {
            best = t;
            best_gain = gain;
          }
        }
      } else {
        if (at_upper(t)) continue;
        gmax_n2 = std::max(gmax_n2, -g);
        const double diff = gmax_n - g;
        if (kn != nullptr && diff > 0.0) {
          double quad = 2.0 - 2.0 * (*kn)(k);
          if (quad <= 0.0) quad = kTau;
          const double gain = -(diff * diff) / quad;
          if (gain <= best_gain) {
            best = t;
            best_gain = gain;
          }
        }
      }
    }

    const double residual = std::max(gmax_p + gmax_p2, gmax_n + gmax_n2);
    out_j = best;
    out_i = best < 0 ? -1 : (best < n_ ? ip : in);
    return std::isfinite(residual) ? residual : 0.0;
  }

  // Exact minimization along z_i - delta, z_j + delta within the box.
  void take_step(Eigen::Index i, Eigen::Index j) {
    const Eigen::Index ki = sample(i);
    const Eigen::Index kj = sample(j);
    const Eigen::VectorXd ri = kernel_.row(ki);
    const Eigen::VectorXd& rj = kernel_.row(kj);
    const double C = cfg_.C;

    double quad = 2.0 - 2.0 * ri(kj);
    if (quad <= 0.0) quad = kTau;
    const double delta = (grad(i) - grad(j)) / quad;
    const double old_i = z_(i);
    const double old_j = z_(j);
    const double sum = old_i + old_j;
    double ai = old_i - delta;
    double aj = old_j + delta;
    if (sum > C) {
      if (ai > C) {
        ai = C;
        aj = sum - C;
      }
    } else if (aj < 0.0) {
      aj = 0.0;
      ai = sum;
    }
    if (sum > C) {
      if (aj > C) {
        aj = C;
        ai = sum - C;
      }
    } else if (ai < 0.0) {
      ai = 0.0;
      aj = sum;
    }
    z_(i) = ai;
    z_(j) = aj;

    const double s = sign(i);  // same class for i and j
    const double dbi = s * (ai - old_i);
    const double dbj = s * (aj - old_j);
    if (dbi != 0.0) f_.noalias() += dbi * ri;
    if (dbj != 0.0) f_.noalias() += dbj * rj;
  }

  Eigen::Index n_;
  const Eigen::VectorXd& y_;
  SvrConfig cfg_;
  KernelRows kernel_;
  Eigen::VectorXd z_;
  Eigen::VectorXd f_;
  long iterations_ = 0;
  double residual_ = std::numeric_limits<double>::infinity();
};

TrainResult train_any_size(const TrainingSet& data, const SvrConfig& cfg) {
  cfg.validate();
  if (data.size() < 1 || data.x.rows() != data.distance.size()) {
    throw std::invalid_argument("nu-svr: empty or inconsistent training set");
  }
  const FeatureScaler scaler = FeatureScaler::fit(data.x);
  const FeatureMatrix xs = scaler.apply(data.x);

  NuSvrSolver solver(xs, data.distance, cfg);
  solver.solve();
  const auto [bias, epsilon] = solver.bias_and_epsilon();
  const Eigen::VectorXd beta = solver.beta();

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (beta(i) != 0.0) sv.push_back(i);
  }
  FeatureMatrix svs(static_cast<Eigen::Index>(sv.size()), 4);
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    svs.row(static_cast<Eigen::Index>(k)) = xs.row(sv[k]);
    coeffs(static_cast<Eigen::Index>(k)) = beta(sv[k]);
  }

  TrainResult out{SvrModel(std::move(svs), std::move(coeffs), bias, epsilon, scaler, cfg), {}};
  out.report.iterations = solver.iterations();
  out.report.kkt_residual = solver.residual();
  out.report.objective = solver.objective();
  out.report.alpha = solver.alpha();
  out.report.alpha_star = solver.alpha_star();
  return out;
}

}  // namespace

void SvrConfig::validate() const {
  if (!(C > 0.0)) throw std::invalid_argument("svr: C must be > 0");
  if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("svr: nu must lie in (0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("svr: gamma must be > 0");
  if (max_iter < 1) throw std::invalid_argument("svr: max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("svr: tol must be > 0");
}

FeatureScaler FeatureScaler::fit(const FeatureMatrix& x) {
  FeatureScaler s;
  if (x.rows() == 0) return s;
  s.mean = x.colwise().mean().transpose();
  for (int c = 0; c < 4; ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().mean();
    s.stddev(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  return s;
}

FeatureMatrix FeatureScaler::apply(const FeatureMatrix& raw) const {
  FeatureMatrix out = raw.rowwise() - mean.transpose();
  out.array().rowwise() /= stddev.transpose().array();
  return out;
}

void TrainingSet::push_back(const BoundingBox& box, double d) {
  const Eigen::Index n = size();
  x.conservativeResize(n + 1, Eigen::NoChange);
  distance.conservativeResize(n + 1);
  x.row(n) = features_of(box).transpose();
  distance(n) = d;
}

TrainingSet TrainingSet::subset(const std::vector<Eigen::Index>& rows) const {
  TrainingSet out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), 4);
  out.distance.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.x.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
    out.distance(static_cast<Eigen::Index>(k)) = distance(rows[k]);
  }
  return out;
}

void TrainingSet::validate() const {
  if (x.rows() != distance.size()) {
    throw std::invalid_argument("training set: feature and distance row counts differ");
  }
  if (size() < kMinRows) {
    throw std::invalid_argument("training set: need at least " + std::to_string(kMinRows) +
                                " rows, got " + std::to_string(size()));
  }
  if (!x.allFinite() || !distance.allFinite()) {
    throw std::invalid_argument("training set: non-finite values");
  }
  if ((distance.array() <= 0.0).any()) {
    throw std::invalid_argument("training set: distances must be > 0");
  }
}

SvrModel::SvrModel(FeatureMatrix support_vectors, Eigen::VectorXd dual_coeffs, double bias,
                   double epsilon, FeatureScaler scaler, SvrConfig config)
    : support_vectors_(std::move(support_vectors)), dual_coeffs_(std::move(dual_coeffs)),
      bias_(bias), epsilon_(epsilon), scaler_(scaler), config_(config) {
  if (support_vectors_.rows() != dual_coeffs_.size()) {
    throw std::invalid_argument("svr model: support vector and coefficient counts differ");
  }
}

double SvrModel::predict(const Eigen::Vector4d& features) const {
  const Eigen::RowVector4d q = scaler_.apply(features).transpose();
  double sum = bias_;
  for (Eigen::Index i = 0; i < support_vectors_.rows(); ++i) {
    sum += dual_coeffs_(i) * std::exp(-config_.gamma * (support_vectors_.row(i) - q).squaredNorm());
  }
  return sum;
}

Eigen::VectorXd SvrModel::predict(const FeatureMatrix& rows) const {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out(r) = predict(Eigen::Vector4d(rows.row(r).transpose()));
  }
  return out;
}

TrainResult train_nu_svr(const TrainingSet& data, const SvrConfig& cfg) {
  data.validate();
  return train_any_size(data, cfg);
}

double mean_squared_error(const SvrModel& model, const TrainingSet& data) {
  if (data.size() == 0) return 0.0;
  return (model.predict(data.x) - data.distance).squaredNorm() / static_cast<double>(data.size());
}

std::vector<SvrConfig> SvrGrid::expand(const SvrConfig& base) const {
  std::vector<SvrConfig> out;
  for (double c : C) {
    for (double n : nu) {
      for (double g : gamma) {
        SvrConfig cfg = base;
        cfg.C = c;
        cfg.nu = n;
        cfg.gamma = g;
        out.push_back(cfg);
      }
    }
  }
  return out;
}

double cross_validate(const TrainingSet& data, const SvrConfig& cfg, int folds, std::uint64_t seed) {
  const Eigen::Index n = data.size();
  if (folds < 2 || folds > n) {
    throw std::invalid_argument("cross-validation: folds must lie in [2, n]");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    const auto lo = static_cast<std::size_t>(n * f / folds);
    const auto hi = static_cast<std::size_t>(n * (f + 1) / folds);
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> test_rows(order.begin() + static_cast<long>(lo),
                                        order.begin() + static_cast<long>(hi));
    train_rows.insert(train_rows.end(), order.begin(), order.begin() + static_cast<long>(lo));
    train_rows.insert(train_rows.end(), order.begin() + static_cast<long>(hi), order.end());
    const SvrModel model = train_any_size(data.subset(train_rows), cfg).model;
    total += mean_squared_error(model, data.subset(test_rows)) * static_cast<double>(test_rows.size());
  }
  return total / static_cast<double>(n);
}

GridSearchResult grid_search_cv(const TrainingSet& data, const std::vector<SvrConfig>& grid,
                                int folds, std::uint64_t seed) {
  data.validate();
  if (grid.empty()) {
    throw std::invalid_argument("grid search: empty grid");
  }
  GridSearchResult out;
  const GridPointResult* best = nullptr;
  out.points.reserve(grid.size());
  for (const SvrConfig& cfg : grid) {
    GridPointResult point{cfg, std::numeric_limits<double>::infinity(), {}};
    try {
      point.cv_mse = cross_validate(data, cfg, folds, seed);
    } catch (const TrainingError& e) {
      point.failure = e.what();
    }
    out.points.push_back(point);
  }
  for (const auto& p : out.points) {
    if (!std::isfinite(p.cv_mse)) continue;
    const bool better =
        best == nullptr || p.cv_mse < best->cv_mse ||
        (p.cv_mse == best->cv_mse &&
         (p.config.C < best->config.C ||
          (p.config.C == best->config.C && p.config.gamma < best->config.gamma)));
    if (better) best = &p;
  }
  if (best == nullptr) {
    throw std::runtime_error("grid search: every grid point failed to train");
  }
  out.best = best->config;
  out.cv_mse = best->cv_mse;
  return out;
}

namespace {

nlohmann::json to_json(const SvrConfig& c) {
  return {{"C", c.C}, {"nu", c.nu}, {"gamma", c.gamma}, {"max_iter", c.max_iter}, {"tol", c.tol}};
}

SvrConfig config_from_json(const nlohmann::json& j) {
  SvrConfig c;
  c.C = j.at("C").get<double>();
  c.nu = j.at("nu").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.max_iter = j.at("max_iter").get<long>();
  c.tol = j.at("tol").get<double>();
  return c;
}

}  // namespace

void save_model(const SvrModel& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "uavfollow-nu-svr";
  j["version"] = 1;
  j["features"] = {"xc", "yc", "w", "h"};
  j["config"] = to_json(model.config());
  j["scaler"] = {{"mean", std::vector<double>(model.scaler().mean.begin(), model.scaler().mean.end())},
                 {"std", std::vector<double>(model.scaler().stddev.begin(), model.scaler().stddev.end())}};
  j["bias"] = model.bias();
  j["epsilon"] = model.epsilon();
  auto& svs = j["support_vectors"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.support_vectors().rows(); ++i) {
    const auto& r = model.support_vectors().row(i);
    svs.push_back({r(0), r(1), r(2), r(3)});
  }
  j["dual_coeffs"] =
      std::vector<double>(model.dual_coeffs().data(), model.dual_coeffs().data() + model.dual_coeffs().size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(path.string() + ": cannot open for writing");
  }
  out << j.dump(1) << '\n';
}

SvrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open SVR model");
  }
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format") != "uavfollow-nu-svr") {
      throw std::runtime_error("unexpected format tag");
    }
    FeatureScaler scaler;
    const auto mean = j.at("scaler").at("mean").get<std::vector<double>>();
    const auto sd = j.at("scaler").at("std").get<std::vector<double>>();
    if (mean.size() != 4 || sd.size() != 4) {
      throw std::runtime_error("scaler must have 4 entries");
    }
    scaler.mean = Eigen::Vector4d(mean.data());
    scaler.stddev = Eigen::Vector4d(sd.data());
    const auto& svs = j.at("support_vectors");
    FeatureMatrix sv(static_cast<Eigen::Index>(svs.size()), 4);
    for (std::size_t i = 0; i < svs.size(); ++i) {
      const auto row = svs[i].get<std::vector<double>>();
      if (row.size() != 4) throw std::runtime_error("support vector must have 4 entries");
      sv.row(static_cast<Eigen::Index>(i)) = Eigen::RowVector4d(row.data());
    }
    const auto coeffs = j.at("dual_coeffs").get<std::vector<double>>();
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    return SvrModel(std::move(sv), std::move(c), j.at("bias").get<double>(),
                    j.at("epsilon").get<double>(), scaler, config_from_json(j.at("config")));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed SVR model: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": malformed SVR model: " + e.what());
  }
}

void save_training_set(const TrainingSet& data, const std::filesystem::path& path) {
  csv::Writer w(path, {"xc", "yc", "w", "h", "distance"});
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    w << data.x(i, 0) << data.x(i, 1) << data.x(i, 2) << data.x(i, 3) << data.distance(i);
    w.end_row();
  }
}

TrainingSet load_training_set(const std::filesystem::path& path) {
  const csv::Table t = csv::Table::read(path);
  const std::size_t cols[5] = {t.column({"xc"}), t.column({"yc"}), t.column({"w"}), t.column({"h"}),
                               t.column({"distance"})};
  TrainingSet data;
  data.x.resize(static_cast<Eigen::Index>(t.rows()), 4);
  data.distance.resize(static_cast<Eigen::Index>(t.rows()));
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < 4; ++c) {
      data.x(static_cast<Eigen::Index>(r), c) = t.number(r, cols[c]);
    }
    data.distance(static_cast<Eigen::Index>(r)) = t.number(r, cols[4]);
  }
  return data;
}

}  // namespace uavfollow
