#pragma once

// Wald tests on fitted coefficients and quantile residuals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rayreg/errors.hpp"
#include "rayreg/estimation.hpp"
#include "rayreg/fisher.hpp"
#include "rayreg/rayleigh.hpp"
#include "rayreg/special.hpp"

namespace rayreg {

struct WaldReport {
  std::vector<std::size_t> interest;  // tested coefficient indices
  Eigen::VectorXd estimate;           // beta_hat restricted to `interest`
  Eigen::VectorXd null_value;         // beta_I0
  double statistic = 0.0;             // T_W
  int dof = 0;
  double p_value = 1.0;
  double threshold = 0.0;  // (1 - pfa) quantile of chi-square(dof)
  double pfa = 0.05;
  bool reject_null = false;
};

// T_W = (b_I - b_I0)^T ([I^{-1}]_{II})^{-1} (b_I - b_I0), compared with the
// chi-square(dof) threshold at false-alarm probability pfa.
inline WaldReport wald_test(const FitResult& fit, const std::vector<std::size_t>& interest,
                            const Eigen::VectorXd& null_value, double pfa = 0.05) {
  if (!fit.converged)
    throw NotConvergedError("wald_test: fit did not converge (" + std::to_string(fit.iterations) +
                            " iterations, |score|_inf = " + std::to_string(fit.score.lpNorm<Eigen::Infinity>()) +
                            ")");
  if (interest.empty()) throw DomainError("wald_test: interest set is empty");
  if (static_cast<std::size_t>(null_value.size()) != interest.size())
    throw DomainError("wald_test: null value length does not match the interest set");
  if (!(pfa > 0.0 && pfa < 1.0)) throw DomainError("wald_test: pfa must lie in (0,1)");
  const auto k = static_cast<std::size_t>(fit.beta_hat.size());
  for (std::size_t i = 0; i < interest.size(); ++i) {
    if (interest[i] >= k) throw DomainError("wald_test: coefficient index " + std::to_string(interest[i]) + " out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (interest[j] == interest[i]) throw DomainError("wald_test: duplicate coefficient index");
  }

  const auto nu = static_cast<Eigen::Index>(interest.size());
  Eigen::VectorXd diff(nu);
  Eigen::MatrixXd sub(nu, nu);
  WaldReport rep;
  rep.interest = interest;
  rep.estimate.resize(nu);
  for (Eigen::Index a = 0; a < nu; ++a) {
    const auto ia = static_cast<Eigen::Index>(interest[static_cast<std::size_t>(a)]);
    rep.estimate(a) = fit.beta_hat(ia);
    diff(a) = fit.beta_hat(ia) - null_value(a);
    for (Eigen::Index b = 0; b < nu; ++b)
      sub(a, b) = fit.covariance(ia, static_cast<Eigen::Index>(interest[static_cast<std::size_t>(b)]));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() != Eigen::Success) throw RankDeficientError("wald_test: covariance block is not positive definite");

  rep.null_value = null_value;
  rep.statistic = std::max(0.0, diff.dot(llt.solve(diff)));
  rep.dof = static_cast<int>(nu);
  rep.pfa = pfa;
  rep.threshold = special::chi_square_quantile(1.0 - pfa, rep.dof);
  rep.p_value = special::chi_square_sf(rep.statistic, rep.dof);
  rep.reject_null = rep.statistic > rep.threshold;
  return rep;
}

// One single-coefficient test of beta_i = 0 for every non-intercept
// coefficient of a dummy-coded design. Empty for an intercept-only model.
inline std::vector<WaldReport> ground_type_detect(const FitResult& fit, double pfa = 0.05) {
  std::vector<WaldReport> out;
  for (Eigen::Index i = 1; i < fit.beta_hat.size(); ++i)
    out.push_back(wald_test(fit, {static_cast<std::size_t>(i)}, Eigen::VectorXd::Zero(1), pfa));
  return out;
}

struct QuantileResiduals {
  Eigen::VectorXd values;
  std::vector<std::size_t> clamped;  // indices where F hit the clamp
};

inline constexpr double kResidualClamp = 1e-15;

// r = Phi^{-1}(F(y; mu)) for a single observation. The upper tail is
// evaluated through 1 - F so residuals of bright pixels keep full precision.
inline double quantile_residual(double y, double mu, bool* was_clamped = nullptr) {
  const RayleighMean d(mu);
  const double lower = cdf(d, y);
  const double upper = survival(d, y);
  bool c = false;
  double r;
  if (lower <= 0.5) {
    double p = lower;
    if (p < kResidualClamp) {
      p = kResidualClamp;
      c = true;
    }
    r = special::normal_quantile(p);
  } else {
    double q = upper;
    if (q < kResidualClamp) {
      q = kResidualClamp;
      c = true;
    }
    r = -special::normal_quantile(q);
  }
  if (was_clamped) *was_clamped = c;
  return r;
}

inline QuantileResiduals quantile_residuals(const ModelSpec& spec, const Eigen::VectorXd& mu) {
  const auto& y = spec.response();
  if (mu.size() != y.size()) throw DomainError("quantile_residuals: mean vector length mismatch");
  QuantileResiduals out;
  out.values.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    bool c = false;
    out.values(i) = quantile_residual(y(i), mu(i), &c);
    if (c) out.clamped.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

inline QuantileResiduals quantile_residuals(const ModelSpec& spec, const FitResult& fit) {
  return quantile_residuals(spec, fit.mu_hat);
}

}  // namespace rayreg
