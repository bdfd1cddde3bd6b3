#pragma once

// Residual control-chart anomaly detection for amplitude images:
//   1. fit the regression on a training rectangle of the image of interest,
//      with co-registered reference images as covariates;
//   2. compute quantile residuals for every pixel;
//   3. flag pixels with |r| > L;
//   4. opening then dilation to remove speckle and consolidate blobs;
//   5. extract 8-connected clusters and merge those with nearby centroids.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rayreg/errors.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/inference.hpp"
#include "rayreg/morphology.hpp"
#include "rayreg/regression.hpp"

namespace rayreg {

// Row-major image of finite real pixels.
class ImageMatrix {
 public:
  ImageMatrix() = default;
  ImageMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), px_(rows * cols, fill) {}
  ImageMatrix(std::size_t rows, std::size_t cols, std::vector<double> pixels)
      : rows_(rows), cols_(cols), px_(std::move(pixels)) {
    if (px_.size() != rows_ * cols_) throw DomainError("ImageMatrix: pixel count does not match rows*cols");
    for (double v : px_)
      if (!std::isfinite(v)) throw DomainError("ImageMatrix: non-finite pixel");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return px_.size(); }
  double operator()(std::size_t r, std::size_t c) const { return px_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return px_[r * cols_ + c]; }
  const std::vector<double>& pixels() const noexcept { return px_; }
  std::vector<double>& pixels() noexcept { return px_; }
  bool same_shape(const ImageMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> px_;
};

struct Rect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t area() const noexcept { return rows * cols; }
  bool within(std::size_t image_rows, std::size_t image_cols) const noexcept {
    return rows > 0 && cols > 0 && row + rows <= image_rows && col + cols <= image_cols;
  }
};

struct DetectorConfig {
  double control_limit = 3.0;
  std::size_t opening_se = 3;
  std::size_t dilation_se = 7;
  double merge_distance_m = 10.0;
  double pixel_size_m = 1.0;
  bool upper_tail_only = false;

  void validate() const {
    if (!(control_limit > 0.0)) throw DomainError("control limit must be positive");
    if (opening_se == 0 || opening_se % 2 == 0) throw DomainError("opening structuring element must be odd and >= 1");
    if (dilation_se == 0 || dilation_se % 2 == 0) throw DomainError("dilation structuring element must be odd and >= 1");
    if (!(merge_distance_m >= 0.0)) throw DomainError("merge distance must be non-negative");
    if (!(pixel_size_m > 0.0)) throw DomainError("pixel size must be positive");
  }
};

// Anomalous iff |r| > L (or r > L in upper-tail mode). |r| = L is in control.
inline BinaryMask threshold_residuals(const ImageMatrix& residuals, double limit, bool upper_tail_only = false) {
  if (!(limit > 0.0)) throw DomainError("threshold_residuals: control limit must be positive");
  BinaryMask m(residuals.rows(), residuals.cols());
  const auto& r = residuals.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) m.set(i, upper_tail_only ? r[i] > limit : std::abs(r[i]) > limit);
  return m;
}

inline BinaryMask postprocess(const BinaryMask& mask, const DetectorConfig& cfg) {
  cfg.validate();
  return dilate(open(mask, cfg.opening_se), cfg.dilation_se);
}

struct TruthPoint {
  double row = 0.0;
  double col = 0.0;
};

struct DetectionScore {
  std::size_t hits = 0;
  std::size_t false_alarms = 0;
  std::size_t missed = 0;
};

// Greedy one-to-one matching, closest (cluster, truth) pair first, restricted
// to pairs within radius_m. Ties are broken by cluster then truth index.
inline DetectionScore score(const std::vector<Cluster>& clusters, const std::vector<TruthPoint>& truth, double radius_m,
                            double pixel_size_m = 1.0) {
  if (!(radius_m >= 0.0)) throw DomainError("score: radius must be non-negative");
  if (!(pixel_size_m > 0.0)) throw DomainError("score: pixel size must be positive");
  struct Pair {
    double d;
    std::size_t c, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double d = pixel_size_m * std::hypot(clusters[c].row - truth[t].row, clusters[c].col - truth[t].col);
      if (d <= radius_m) pairs.push_back({d, c, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.c != b.c) return a.c < b.c;
    return a.t < b.t;
  });
  std::vector<bool> used_c(clusters.size(), false), used_t(truth.size(), false);
  DetectionScore s;
  for (const auto& p : pairs) {
    if (used_c[p.c] || used_t[p.t]) continue;
    used_c[p.c] = used_t[p.t] = true;
    ++s.hits;
  }
  s.false_alarms = clusters.size() - s.hits;
  s.missed = truth.size() - s.hits;
  return s;
}

struct DetectionResult {
  FitResult fit;
  ImageMatrix residuals;
  BinaryMask raw_mask;  // thresholded residuals
  BinaryMask mask;      // after morphology
  std::vector<Cluster> clusters;
  std::size_t clamped_residuals = 0;
  std::optional<DetectionScore> score;
};

namespace detail {

inline Eigen::MatrixXd image_design_rows(const std::vector<const ImageMatrix*>& covariates, const Rect& region) {
  const auto k = static_cast<Eigen::Index>(covariates.size() + 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(region.area()), k);
  Eigen::Index row = 0;
  for (std::size_t r = region.row; r < region.row + region.rows; ++r) {
    for (std::size_t c = region.col; c < region.col + region.cols; ++c, ++row) {
      x(row, 0) = 1.0;
      for (std::size_t j = 0; j < covariates.size(); ++j) x(row, static_cast<Eigen::Index>(j + 1)) = (*covariates[j])(r, c);
    }
  }
  return x;
}

}  // namespace detail

// Builds the training model: response = interest pixels in `training`,
// design = intercept + one column per covariate image.
inline ModelSpec training_model(const ImageMatrix& interest, const std::vector<ImageMatrix>& covariates,
                                const Rect& training, LinkFunction link = LinkFunction{}) {
  for (const auto& cov : covariates)
    if (!cov.same_shape(interest)) throw DomainError("covariate image dimensions differ from the image of interest");
  if (!training.within(interest.rows(), interest.cols())) throw DomainError("training region lies outside the image");
  const std::size_t k = covariates.size() + 1;
  if (training.area() < 10 * k)
    throw DegenerateDesignError("training region has " + std::to_string(training.area()) + " pixels; at least " +
                                std::to_string(10 * k) + " required for " + std::to_string(k) + " coefficients");

  std::vector<std::size_t> zero;
  Eigen::VectorXd y(static_cast<Eigen::Index>(training.area()));
  Eigen::Index i = 0;
  for (std::size_t r = training.row; r < training.row + training.rows; ++r) {
    for (std::size_t c = training.col; c < training.col + training.cols; ++c, ++i) {
      y(i) = interest(r, c);
      if (!(y(i) > 0.0)) zero.push_back(r * interest.cols() + c);
    }
  }
  if (!zero.empty()) throw NonPositiveResponseError(std::move(zero));

  std::vector<const ImageMatrix*> cov_ptrs;
  std::vector<std::string> names{"(Intercept)"};
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    cov_ptrs.push_back(&covariates[j]);
    names.push_back("x" + std::to_string(j + 2));
  }
  return ModelSpec(DesignMatrix(detail::image_design_rows(cov_ptrs, training), std::move(names)), std::move(y), link);
}

inline DetectionResult detect(const ImageMatrix& interest, const std::vector<ImageMatrix>& covariates,
                              const Rect& training, const DetectorConfig& cfg, const RobustConfig& robust,
                              Method method = Method::wmle, LinkFunction link = LinkFunction{}) {
  cfg.validate();
  const ModelSpec spec = training_model(interest, covariates, training, link);

  DetectionResult out;
  out.fit = fit(spec, robust, method);

  std::vector<const ImageMatrix*> cov_ptrs;
  for (const auto& c : covariates) cov_ptrs.push_back(&c);
  const Rect whole{0, 0, interest.rows(), interest.cols()};
  const Eigen::VectorXd eta = detail::image_design_rows(cov_ptrs, whole) * out.fit.beta_hat;

  out.residuals = ImageMatrix(interest.rows(), interest.cols());
  auto& r = out.residuals.pixels();
  for (std::size_t p = 0; p < r.size(); ++p) {
    const double mu = link.inverse(eta(static_cast<Eigen::Index>(p)));
    if (!(mu > 0.0) || !std::isfinite(mu)) throw NonPositiveMeanError(p);
    bool clamped = false;
    r[p] = quantile_residual(interest.pixels()[p], mu, &clamped);
    if (clamped) ++out.clamped_residuals;
  }

  out.raw_mask = threshold_residuals(out.residuals, cfg.control_limit, cfg.upper_tail_only);
  out.mask = postprocess(out.raw_mask, cfg);
  out.clusters = merge_clusters(connected_components(out.mask), cfg.merge_distance_m / cfg.pixel_size_m);
  return out;
}

inline DetectionResult detect(const ImageMatrix& interest, const std::vector<ImageMatrix>& covariates,
                              const Rect& training, const DetectorConfig& cfg, const RobustConfig& robust,
                              const std::vector<TruthPoint>& truth, Method method = Method::wmle,
                              LinkFunction link = LinkFunction{}) {
  DetectionResult out = detect(interest, covariates, training, cfg, robust, method, link);
  out.score = score(out.clusters, truth, cfg.merge_distance_m, cfg.pixel_size_m);
  return out;
}

}  // namespace rayreg
