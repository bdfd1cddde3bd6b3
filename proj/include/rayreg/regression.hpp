#pragma once

// Model specification for Rayleigh regression: g(mu[n]) = x[n]^T beta.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rayreg/errors.hpp"

namespace rayreg {

enum class LinkKind { log, identity };

class LinkFunction {
 public:
  constexpr LinkFunction() = default;
  constexpr explicit LinkFunction(LinkKind kind) : kind_(kind) {}

  static LinkFunction parse(std::string_view name) {
    if (name == "log") return LinkFunction{LinkKind::log};
    if (name == "identity") return LinkFunction{LinkKind::identity};
    throw DomainError("unknown link function '" + std::string(name) + "' (expected log or identity)");
  }

  constexpr LinkKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return kind_ == LinkKind::log ? "log" : "identity"; }

  // g(mu)
  double link(double mu) const { return kind_ == LinkKind::log ? std::log(mu) : mu; }
  // g^{-1}(eta)
  double inverse(double eta) const { return kind_ == LinkKind::log ? std::exp(eta) : eta; }
  // g'(mu)
  double derivative(double mu) const { return kind_ == LinkKind::log ? 1.0 / mu : 1.0; }
  // d mu / d eta = 1 / g'(mu)
  double mu_eta(double mu) const { return kind_ == LinkKind::log ? mu : 1.0; }

  // Expected-information weight 4/mu^2 (d mu/d eta)^2. Exactly 4 under the log
  // link, which makes the information matrix independent of mu.
  double fisher_weight(double mu) const {
    if (kind_ == LinkKind::log) return 4.0;
    const double d = mu_eta(mu);
    return 4.0 * d * d / (mu * mu);
  }

  friend constexpr bool operator==(LinkFunction, LinkFunction) = default;

 private:
  LinkKind kind_ = LinkKind::log;
};

// N x k covariate matrix, one observation per row.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> column_names)
      : x_(std::move(x)), names_(std::move(column_names)) {
    if (names_.empty()) {
      for (Eigen::Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    }
    if (static_cast<Eigen::Index>(names_.size()) != x_.cols())
      throw DomainError("DesignMatrix: column name count does not match column count");
    if (x_.cols() == 0) throw DegenerateDesignError("DesignMatrix: no columns");
    if (x_.cols() >= x_.rows())
      throw DegenerateDesignError("DesignMatrix: need more observations (" + std::to_string(x_.rows()) +
                                  ") than covariates (" + std::to_string(x_.cols()) + ")");
    if (!x_.allFinite()) throw DomainError("DesignMatrix: non-finite covariate value");
  }

  explicit DesignMatrix(Eigen::MatrixXd x) : DesignMatrix(std::move(x), {}) {}

  const Eigen::MatrixXd& matrix() const noexcept { return x_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  // Numerical rank with singular values below 1e-10 * sigma_max treated as zero.
  std::size_t rank() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x_);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double tol = 1e-10 * s(0);
    return static_cast<std::size_t>((s.array() > tol).count());
  }

  void require_full_rank() const {
    const std::size_t r = rank();
    if (r < cols())
      throw RankDeficientError("design matrix is rank deficient (rank " + std::to_string(r) + " < " +
                               std::to_string(cols()) + " columns)");
  }

 private:
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
};

class ModelSpec {
 public:
  ModelSpec(DesignMatrix design, Eigen::VectorXd response, LinkFunction link = LinkFunction{})
      : design_(std::move(design)), y_(std::move(response)), link_(link) {
    if (static_cast<std::size_t>(y_.size()) != design_.rows())
      throw DomainError("ModelSpec: response length " + std::to_string(y_.size()) + " does not match " +
                        std::to_string(design_.rows()) + " design rows");
    std::vector<std::size_t> bad;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (!(y_(i) > 0.0) || !std::isfinite(y_(i))) bad.push_back(static_cast<std::size_t>(i));
    }
    if (!bad.empty()) throw NonPositiveResponseError(std::move(bad));
  }

  const DesignMatrix& design() const noexcept { return design_; }
  const Eigen::MatrixXd& x() const noexcept { return design_.matrix(); }
  const Eigen::VectorXd& response() const noexcept { return y_; }
  LinkFunction link() const noexcept { return link_; }
  std::size_t observations() const noexcept { return design_.rows(); }
  std::size_t parameters() const noexcept { return design_.cols(); }

 private:
  DesignMatrix design_;
  Eigen::VectorXd y_;
  LinkFunction link_;
};

inline Eigen::VectorXd linear_predictor(const ModelSpec& spec, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != spec.parameters())
    throw DomainError("coefficient vector length does not match design columns");
  return spec.x() * beta;
}

// mu[n] = g^{-1}(x[n]^T beta). Throws NonPositiveMeanError for the first
// observation whose mean is not strictly positive.
inline Eigen::VectorXd predict_mean(const ModelSpec& spec, const Eigen::VectorXd& beta) {
  if (!beta.allFinite()) throw DomainError("predict_mean: non-finite coefficient");
  const Eigen::VectorXd eta = linear_predictor(spec, beta);
  const LinkFunction link = spec.link();
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    mu(i) = link.inverse(eta(i));
    if (!(mu(i) > 0.0) || !std::isfinite(mu(i))) throw NonPositiveMeanError(static_cast<std::size_t>(i));
  }
  return mu;
}

// Treatment coding: an intercept column plus a 0/1 indicator per
// non-reference level, levels ordered by first appearance.
inline DesignMatrix dummy_design(std::span<const std::string> labels, const std::string& reference) {
  std::vector<std::string> levels;
  for (const auto& l : labels) {
    if (std::find(levels.begin(), levels.end(), l) == levels.end()) levels.push_back(l);
  }
  if (std::find(levels.begin(), levels.end(), reference) == levels.end())
    throw DegenerateDesignError("dummy_design: reference level '" + reference + "' not present");
  if (levels.size() < 2) throw DegenerateDesignError("dummy_design: need at least two distinct categories");

  std::vector<std::string> others;
  for (const auto& l : levels)
    if (l != reference) others.push_back(l);

  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(others.size() + 1));
  x.col(0).setOnes();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = std::find(others.begin(), others.end(), labels[static_cast<std::size_t>(i)]);
    if (it != others.end()) x(i, 1 + (it - others.begin())) = 1.0;
  }
  std::vector<std::string> names{"(Intercept)"};
  for (const auto& l : others) names.push_back(l);
  return DesignMatrix(std::move(x), std::move(names));
}

// Least-squares regression of g(y) on X, the optimizer's starting point.
// Under the identity link an infeasible start (some eta <= 0) falls back to
// the least-squares fit of the constant mean(y).
inline Eigen::VectorXd initial_coefficients(const ModelSpec& spec) {
  const auto& x = spec.x();
  const auto& y = spec.response();
  const LinkFunction link = spec.link();
  Eigen::VectorXd gy(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) gy(i) = link.link(y(i));
  const auto qr = x.colPivHouseholderQr();
  Eigen::VectorXd beta = qr.solve(gy);
  if (link.kind() == LinkKind::identity && ((x * beta).array() <= 0.0).any()) {
    beta = qr.solve(Eigen::VectorXd::Constant(y.size(), y.mean()));
    if (((x * beta).array() <= 0.0).any())
      throw NonPositiveMeanError(static_cast<std::size_t>(0));
  }
  return beta;
}

}  // namespace rayreg
