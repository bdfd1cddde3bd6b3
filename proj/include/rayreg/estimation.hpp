#pragma once

// Maximum-likelihood (MLE) and weighted maximum-likelihood (WMLE) fitting of
// the Rayleigh regression model.
//
// The weighted log-likelihood is  l_w(beta) = sum_n w[n] l[n](mu[n])  with
//   l[n] = log(pi/2) + log y[n] - 2 log mu[n] - pi y[n]^2 / (4 mu[n]^2).
// Its gradient (the weighted score) is X^T W T v with
//   v[n] = pi y[n]^2 / (2 mu[n]^3) - 2 / mu[n],  T[n] = d mu / d eta.
//
// WMLE weights down-weight observations in either delta-tail of the fitted
// distribution:  w = F/delta if F < delta, (1-F)/delta if F > 1-delta, else 1,
// with F evaluated at the MLE means.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "rayreg/bfgs.hpp"
#include "rayreg/errors.hpp"
#include "rayreg/fisher.hpp"
#include "rayreg/rayleigh.hpp"
#include "rayreg/regression.hpp"

namespace rayreg {

struct RobustConfig {
  double delta = 0.001;
  // 0 gives the plain MLE; 1 (default) is a single reweighting pass from the
  // MLE fit; larger values recompute the weights from each successive fit.
  int reweight_iterations = 1;
  int max_iter = 500;
  double grad_tol = 1e-6;
  double ll_rel_tol = 1e-9;

  void validate() const {
    if (!(delta > 0.0 && delta < 0.5)) throw DomainError("delta must lie in (0, 0.5)");
    if (reweight_iterations < 0) throw DomainError("reweight_iterations must be non-negative");
    if (max_iter <= 0) throw DomainError("max_iter must be positive");
    if (!(grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
    if (!(ll_rel_tol > 0.0)) throw DomainError("ll_rel_tol must be positive");
  }
};

enum class Method { mle, wmle };

inline std::string_view to_string(Method m) { return m == Method::mle ? "MLE" : "WMLE"; }

inline Method parse_method(std::string_view s) {
  if (s == "mle" || s == "MLE") return Method::mle;
  if (s == "wmle" || s == "WMLE") return Method::wmle;
  throw DomainError("unknown estimation method '" + std::string(s) + "' (expected mle or wmle)");
}

struct FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd weights;
  Eigen::VectorXd mu_hat;
  double loglik = 0.0;  // weighted log-likelihood at beta_hat
  Eigen::MatrixXd fisher_info;
  Eigen::MatrixXd covariance;  // inverse Fisher information
  Eigen::VectorXd std_errors;
  Eigen::VectorXd score;  // weighted score at beta_hat
  bool converged = false;
  int iterations = 0;
  Method method = Method::mle;
  std::vector<double> loglik_trace;  // weighted log-likelihood per accepted step
  std::vector<std::string> column_names;

  std::size_t downweighted() const { return static_cast<std::size_t>((weights.array() < 1.0).count()); }
};

inline double weighted_loglik(const ModelSpec& spec, const Eigen::VectorXd& beta, const Eigen::VectorXd& w) {
  const Eigen::VectorXd mu = predict_mean(spec, beta);
  const auto& y = spec.response();
  const double log_half_pi = std::log(std::numbers::pi / 2.0);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w(i) == 0.0) continue;
    sum += w(i) * (log_half_pi + std::log(y(i)) - 2.0 * std::log(mu(i)) - detail::rayleigh_exponent(mu(i), y(i)));
  }
  return sum;
}

inline Eigen::VectorXd score(const ModelSpec& spec, const Eigen::VectorXd& beta, const Eigen::VectorXd& w) {
  const Eigen::VectorXd mu = predict_mean(spec, beta);
  const auto& y = spec.response();
  const LinkFunction link = spec.link();
  Eigen::VectorXd t(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double m = mu(i);
    const double v = std::numbers::pi * y(i) * y(i) / (2.0 * m * m * m) - 2.0 / m;
    t(i) = w(i) * v * link.mu_eta(m);
  }
  return spec.x().transpose() * t;
}

inline Eigen::VectorXd compute_weights(const ModelSpec& spec, const Eigen::VectorXd& mu_ref, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("compute_weights: delta must lie in (0, 0.5)");
  const auto& y = spec.response();
  if (mu_ref.size() != y.size()) throw DomainError("compute_weights: reference mean length mismatch");
  Eigen::VectorXd w(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const RayleighMean d(mu_ref(i));
    const double lower = cdf(d, y(i));
    const double upper = survival(d, y(i));
    if (lower < delta)
      w(i) = lower / delta;
    else if (upper < delta)
      w(i) = upper / delta;
    else
      w(i) = 1.0;
  }
  return w;
}

namespace detail {

// Negative weighted log-likelihood and its gradient, +inf when some mean is
// non-positive (identity link only).
class NegativeWeightedLoglik {
 public:
  NegativeWeightedLoglik(const ModelSpec& spec, const Eigen::VectorXd& w) : spec_(spec), w_(w) {
    const auto& y = spec.response();
    constant_ = 0.0;
    const double log_half_pi = std::log(std::numbers::pi / 2.0);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (w(i) != 0.0) constant_ += w(i) * (log_half_pi + std::log(y(i)));
  }

  double operator()(const Eigen::VectorXd& beta, Eigen::VectorXd& grad) const {
    const auto& x = spec_.x();
    const auto& y = spec_.response();
    const LinkFunction link = spec_.link();
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd t(y.size());
    double sum = constant_;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double m = link.inverse(eta(i));
      if (!(m > 0.0) || !std::isfinite(m)) return std::numeric_limits<double>::infinity();
      const double wi = w_(i);
      if (wi == 0.0) {
        t(i) = 0.0;
        continue;
      }
      const double ratio = y(i) / m;
      const double q = 0.25 * std::numbers::pi * ratio * ratio;
      sum += wi * (-2.0 * std::log(m) - q);
      // v * d mu/d eta, with v = (2q - 2)/mu
      t(i) = wi * (2.0 * q - 2.0) / m * link.mu_eta(m);
    }
    grad = -(x.transpose() * t);
    return std::isfinite(sum) ? -sum : std::numeric_limits<double>::infinity();
  }

 private:
  const ModelSpec& spec_;
  const Eigen::VectorXd& w_;
  double constant_;
};

inline FitResult fit_weighted(const ModelSpec& spec, const Eigen::VectorXd& w, Eigen::VectorXd start,
                              const RobustConfig& cfg, Method method) {
  NegativeWeightedLoglik objective(spec, w);
  BfgsOptions opt;
  opt.max_iter = cfg.max_iter;
  opt.grad_tol = cfg.grad_tol;
  opt.rel_tol = cfg.ll_rel_tol;
  BfgsResult bf = bfgs_minimize(objective, std::move(start), opt);

  FitResult r;
  r.beta_hat = bf.x;
  r.weights = w;
  r.mu_hat = predict_mean(spec, r.beta_hat);
  r.loglik = -bf.value;
  r.score = -bf.gradient;
  r.converged = bf.converged;
  r.iterations = bf.iterations;
  r.method = method;
  r.loglik_trace.reserve(bf.trace.size());
  for (double f : bf.trace) r.loglik_trace.push_back(-f);
  r.fisher_info = fisher_information(spec, r.mu_hat);
  r.covariance = invert_information(r.fisher_info);
  r.std_errors = r.covariance.diagonal().cwiseSqrt();
  r.column_names = spec.design().column_names();
  return r;
}

}  // namespace detail

// Fit with externally supplied robustness weights, starting from `start`.
inline FitResult fit_with_weights(const ModelSpec& spec, const Eigen::VectorXd& w, const Eigen::VectorXd& start,
                                  const RobustConfig& cfg) {
  cfg.validate();
  if (w.size() != spec.response().size()) throw DomainError("weight vector length mismatch");
  if ((w.array() < 0.0).any() || (w.array() > 1.0).any()) throw DomainError("weights must lie in [0,1]");
  spec.design().require_full_rank();
  return detail::fit_weighted(spec, w, start, cfg, Method::wmle);
}

inline FitResult fit_mle(const ModelSpec& spec, const RobustConfig& cfg = {}) {
  cfg.validate();
  spec.design().require_full_rank();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.observations()));
  return detail::fit_weighted(spec, ones, initial_coefficients(spec), cfg, Method::mle);
}

// MLE fit, weights from the MLE means, then the weighted fit started from the
// MLE solution; repeated reweight_iterations times.
inline FitResult fit_wmle(const ModelSpec& spec, const RobustConfig& cfg = {}) {
  FitResult current = fit_mle(spec, cfg);
  if (cfg.reweight_iterations == 0) return current;
  for (int round = 0; round < cfg.reweight_iterations; ++round) {
    const Eigen::VectorXd w = compute_weights(spec, current.mu_hat, cfg.delta);
    current = detail::fit_weighted(spec, w, current.beta_hat, cfg, Method::wmle);
  }
  return current;
}

inline FitResult fit(const ModelSpec& spec, const RobustConfig& cfg, Method method) {
  return method == Method::mle ? fit_mle(spec, cfg) : fit_wmle(spec, cfg);
}

// MLE and WMLE on the same data, the WMLE reusing the MLE fit as its
// reference and starting point.
struct FitPair {
  FitResult mle;
  FitResult wmle;
};

inline FitPair fit_both(const ModelSpec& spec, const RobustConfig& cfg = {}) {
  FitPair out;
  out.mle = fit_mle(spec, cfg);
  out.wmle = out.mle;
  for (int round = 0; round < cfg.reweight_iterations; ++round) {
    const Eigen::VectorXd w = compute_weights(spec, out.wmle.mu_hat, cfg.delta);
    out.wmle = detail::fit_weighted(spec, w, out.wmle.beta_hat, cfg, Method::wmle);
  }
  return out;
}

}  // namespace rayreg
